//! Heilbronn matrices realizing Hecke operators on Manin symbols.
//!
//! A matrix `[a, b, c, d]` acts on a symbol `(u : v)` by `(u a + v c : u b + v d)`.

/// Cremona's Heilbronn set of determinant `p`, for a prime `p` not dividing the level.
pub fn cremona<F: FnMut(i64, i64, i64, i64)>(p: u64, mut f: F) {
    if p == 2 {
        f(1, 0, 0, 2);
        f(2, 0, 0, 1);
        f(2, 1, 0, 1);
        f(1, 0, 1, 2);
        return;
    }
    let p = p as i64;
    f(1, 0, 0, p);
    let half = (p - 1) / 2;
    for r in -half..=half {
        let (mut x1, mut x2, mut y1, mut y2) = (p, -r, 0i64, 1i64);
        let (mut a, mut b) = (-p, r);
        f(x1, x2, y1, y2);
        while b != 0 {
            let q = round_div(a, b);
            let c = a - b * q;
            a = -b;
            b = c;
            let x3 = q * x2 - x1;
            x1 = x2;
            x2 = x3;
            let y3 = q * y2 - y1;
            y1 = y2;
            y2 = y3;
            f(x1, x2, y1, y2);
        }
    }
}

/// Nearest integer to `a / b`, halves rounded away from zero.
fn round_div(a: i64, b: i64) -> i64 {
    let (a, b) = if b < 0 { (-a, -b) } else { (a, b) };
    let q = a.div_euclid(b);
    let r = a.rem_euclid(b);
    if 2 * r > b || (2 * r == b && q >= 0) {
        q + 1
    } else {
        q
    }
}

/// Reduction modulo a fixed `q < 2^20` through a floating-point reciprocal.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ModQ {
    q: i64,
    inv: f64,
}

impl ModQ {
    pub(crate) fn new(q: u64) -> Self {
        Self {
            q: q as i64,
            inv: 1.0 / q as f64,
        }
    }

    /// `x mod q` in `[0, q)` for `|x| < 2^50`.
    #[inline(always)]
    pub(crate) fn reduce(&self, x: i64) -> i64 {
        // Truncation is a single instruction; floor may be a libm call.
        let k = (x as f64 * self.inv) as i64;
        let mut r = x - k * self.q;
        // Branch-free corrections: r lies in (-2q, 2q) here.
        r += (r >> 63) & self.q;
        r += (r >> 63) & self.q;
        let s = r - self.q;
        s + ((s >> 63) & self.q)
    }
}

/// Tally the images of several symbols `(u : v)` under Cremona's set for `p`, at a
/// prime level `q` not dividing `p`: `counts[s][i]` gains one for each matrix sending
/// symbol `s` to point `i` of `P^1(Z/q)`, indexed as in `P1`.
///
/// The continued-fraction recursion acts linearly on image pairs, so images are
/// advanced alongside the matrices. The matrices for `-r` are `-eta M eta` with
/// `eta = diag(-1, 1)` and `M` a matrix for `r`, so one recursion serves both: the
/// `-r` images of `x` are the starred `r` images of `x*`.
pub(crate) fn cremona_images(
    p: u64,
    q: u64,
    inverse: &[u32],
    symbols: &[(i64, i64)],
    counts: &mut [Vec<u32>],
) {
    let m = ModQ::new(q);
    let qi = q as i64;
    let point = |c: i64, d: i64| -> usize {
        if d == 0 {
            qi as usize
        } else {
            m.reduce(c * i64::from(inverse[d as usize])) as usize
        }
    };
    let starred = |c: i64, d: i64| -> usize {
        if d == 0 {
            qi as usize
        } else {
            let t = m.reduce(c * i64::from(inverse[d as usize]));
            (if t == 0 { 0 } else { qi - t }) as usize
        }
    };
    if p == 2 {
        for (s, &(u, v)) in symbols.iter().enumerate() {
            for (a, b, c, d) in [(1, 0, 0, 2), (2, 0, 0, 1), (2, 1, 0, 1), (1, 0, 1, 2)] {
                counts[s][point(m.reduce(u * a + v * c), m.reduce(u * b + v * d))] += 1;
            }
        }
        return;
    }
    let pi = p as i64;
    let half = (pi - 1) / 2;
    for (s, &(u, v)) in symbols.iter().enumerate() {
        counts[s][point(m.reduce(u), m.reduce(pi * v))] += 1;
        // r = 0: the single matrix [p, 0; 0, 1].
        counts[s][point(m.reduce(u * pi), m.reduce(v))] += 1;
    }
    // Per symbol: images of x and of x* under the current matrix of the r-chain.
    let mut state: Vec<[i64; 4]> = vec![[0; 4]; symbols.len()];
    for r in 1..=half {
        for (s, &(u, v)) in symbols.iter().enumerate() {
            let st = &mut state[s];
            st[0] = m.reduce(u * pi);
            st[1] = m.reduce(-u * r + v);
            st[2] = m.reduce(-u * pi);
            st[3] = m.reduce(u * r + v);
            counts[s][point(st[0], st[1])] += 1;
            counts[s][starred(st[2], st[3])] += 1;
        }
        let (mut a, mut b) = (-(pi as i32), r as i32);
        while b != 0 {
            // Nearest integer to a / b, halves away from zero; exact since |a|, |b| < 2^31.
            let x = f64::from(a) / f64::from(b);
            let k = (x + 0.5f64.copysign(x)) as i32;
            let c = a - b * k;
            a = -b;
            b = c;
            let k = i64::from(k);
            for (s, st) in state.iter_mut().enumerate() {
                let i3 = m.reduce(k * st[1] - st[0]);
                st[0] = st[1];
                st[1] = i3;
                let j3 = m.reduce(k * st[3] - st[2]);
                st[2] = st[3];
                st[3] = j3;
                counts[s][point(st[0], st[1])] += 1;
                counts[s][starred(st[2], st[3])] += 1;
            }
        }
    }
}

/// Number of matrices in [`cremona`] for `p`.
pub fn cremona_len(p: u64) -> usize {
    let mut n = 0;
    cremona(p, |_, _, _, _| n += 1);
    n
}

/// Merel's set: all `[a, b, c, d]` with `ad - bc = n`, `a > b >= 0`, `d > c >= 0`.
///
/// Valid for every `n`, including `n` divisible by the level, provided images
/// that vanish in `P^1` are dropped.
pub fn merel<F: FnMut(i64, i64, i64, i64)>(n: u64, mut f: F) {
    let n = n as i64;
    for a in 1..=n {
        for b in 0..a {
            // b c = a d - n with d > c >= 0; c < n / (a - b).
            let c_bound = (n + (a - b) - 1) / (a - b);
            if b == 0 {
                if n % a == 0 {
                    let d = n / a;
                    for c in 0..d.min(c_bound) {
                        f(a, 0, c, d);
                    }
                }
                continue;
            }
            // Solve b c = -n (mod a).
            let g = gcd(a, b);
            if n % g != 0 {
                continue;
            }
            let m = a / g;
            let bb = (b / g).rem_euclid(m);
            let target = (-(n / g)).rem_euclid(m);
            let c0 = if m == 1 {
                0
            } else {
                (target * inv_mod(bb, m)).rem_euclid(m)
            };
            let mut c = c0;
            while c < c_bound {
                let d = (n + b * c) / a;
                if d > c {
                    f(a, b, c, d);
                }
                c += m;
            }
        }
    }
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

fn inv_mod(a: i64, m: i64) -> i64 {
    let (mut r0, mut r1) = (m, a);
    let (mut s0, mut s1) = (0i64, 1i64);
    while r1 != 0 {
        let k = r0 / r1;
        (r0, r1) = (r1, r0 - k * r1);
        (s0, s1) = (s1, s0 - k * s1);
    }
    s0.rem_euclid(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinants() {
        for p in [2u64, 3, 5, 7, 11, 97] {
            cremona(p, |a, b, c, d| {
                assert_eq!(a * d - b * c, p as i64, "p = {p}")
            });
            merel(p, |a, b, c, d| {
                assert_eq!(a * d - b * c, p as i64);
                assert!(a > b && b >= 0 && d > c && c >= 0);
            });
        }
    }

    #[test]
    fn merel_counts_match_brute_force() {
        for n in [2i64, 3, 4, 6, 11, 12] {
            let mut brute = 0;
            for a in 1..=n + 1 {
                for b in 0..a {
                    for d in 1..=n + 1 {
                        for c in 0..d {
                            if a * d - b * c == n {
                                brute += 1;
                            }
                        }
                    }
                }
            }
            let mut fast = 0;
            merel(n as u64, |_, _, _, _| fast += 1);
            assert_eq!(fast, brute, "n = {n}");
        }
    }

    #[test]
    fn fast_images_match_generic_action() {
        let q = 101u64;
        let p1 = crate::heckespace::P1::new(q);
        let inverse: Vec<u32> = (0..q)
            .map(|d| {
                if d == 0 {
                    0
                } else {
                    (1..q).find(|x| x * d % q == 1).unwrap() as u32
                }
            })
            .collect();
        for p in [2u64, 3, 5, 7, 97, 211, 1009] {
            for sym in [0usize, 1, 17, 100, 101] {
                let (u, v) = p1.pair(sym);
                let mut slow = vec![0u32; p1.len()];
                cremona(p, |a, b, c, d| {
                    slow[p1.index(u * a + v * c, u * b + v * d).unwrap()] += 1
                });
                let mut fast = vec![vec![0u32; p1.len()]; 2];
                cremona_images(p, q, &inverse, &[(u, v), (1, 0)], &mut fast);
                assert_eq!(slow, fast[0], "p = {p}, symbol {sym}");
            }
        }
    }

    #[test]
    fn reciprocal_reduction() {
        let m = ModQ::new(4999);
        for x in [
            -1i64 << 40,
            -4999,
            -1,
            0,
            1,
            4998,
            4999,
            123_456_789_012,
            1 << 49,
        ] {
            assert_eq!(m.reduce(x), x.rem_euclid(4999), "x = {x}");
        }
    }

    #[test]
    fn rounding() {
        assert_eq!(round_div(7, 2), 4);
        assert_eq!(round_div(-7, 2), -4);
        assert_eq!(round_div(5, 3), 2);
        assert_eq!(round_div(-5, 3), -2);
        assert_eq!(round_div(5, -3), -2);
    }
}
