//! Weight-2 modular symbols for `Gamma_0(q)` at prime level, Hecke operators and
//! eigenform tables of normalized eigenvalues.

mod eigen;
mod exact;
mod heilbronn;
mod p1;
mod sign;
mod space;
mod table;

pub use eigen::{
    default_n_max, eigen_split, eigen_tables, sign_prime_bound, tables_from_basis, EigenBasis,
    GENERATOR_PRIMES, RESIDUAL_TOL, SPLIT_ATTEMPTS, SPLIT_GAP,
};
pub use exact::{kernel, Echelon, RationalMatrix, SparseRow, SparseVec};
pub use heilbronn::{cremona, cremona_len, merel};
pub use p1::P1;
pub use sign::{completed_halves, sign_of_functional_equation, sign_ratio};
pub use space::{build_space, genus_oracle, HeckeSpace, MAX_LEVEL, MIN_LEVEL};
pub use table::{lambda_extend, trace, EigenformTable};
