//! The projective line over `Z/q` for a prime `q`, indexing Manin symbols.

/// `P^1(Z/q)` with `(c : 1) -> c` and `(1 : 0) -> q`.
#[derive(Debug, Clone)]
pub struct P1 {
    q: u64,
    inverse: Vec<u32>,
}

impl P1 {
    pub fn new(q: u64) -> Self {
        let mut inverse = vec![0u32; q as usize];
        for a in 1..q {
            if inverse[a as usize] == 0 {
                let b = mod_inverse(a, q);
                inverse[a as usize] = b as u32;
                inverse[b as usize] = a as u32;
            }
        }
        Self { q, inverse }
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    /// `inverse[d] = d^{-1} mod q` (entry 0 unused).
    pub(crate) fn inverse_table(&self) -> &[u32] {
        &self.inverse
    }

    /// Number of points, `q + 1`.
    pub fn len(&self) -> usize {
        self.q as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Representative `(c, d)` of point `i`.
    pub fn pair(&self, i: usize) -> (i64, i64) {
        if i as u64 == self.q {
            (1, 0)
        } else {
            (i as i64, 1)
        }
    }

    /// Index of `(c : d)`, or `None` when both coordinates vanish mod `q`.
    #[inline]
    pub fn index(&self, c: i64, d: i64) -> Option<usize> {
        let q = self.q as i64;
        let c = c.rem_euclid(q);
        let d = d.rem_euclid(q);
        if d == 0 {
            return if c == 0 { None } else { Some(self.q as usize) };
        }
        let inv = self.inverse[d as usize] as i64;
        Some(((c * inv) % q) as usize)
    }
}

fn mod_inverse(a: u64, q: u64) -> u64 {
    let (mut r0, mut r1) = (q as i64, a as i64);
    let (mut s0, mut s1) = (0i64, 1i64);
    while r1 != 0 {
        let k = r0 / r1;
        (r0, r1) = (r1, r0 - k * r1);
        (s0, s1) = (s1, s0 - k * s1);
    }
    s0.rem_euclid(q as i64) as u64
}
