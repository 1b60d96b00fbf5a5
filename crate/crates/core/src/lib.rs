//! Trace monoids (free partially commutative monoids) end to end.
//!
//! * [`alphabet`]: independence alphabets and their graph classifications.
//! * [`trace`]: Foata normal forms, products, prefixes and the FNF ultrametric.
//! * [`endo`]: endomorphisms, iteration and the uniform continuity test.
//! * [`fixpoints`]: finite generating sets for fixed and periodic points.
//! * [`semilinear`]: natural solutions of affine systems `x = c + Mx`.
//! * [`boundary`]: real traces, the continuous extension of an endomorphism
//!   and mp-rational descriptions of its infinite fixed points.
//! * [`cli`]: the problem-file format and the command runner.

pub mod alphabet;
pub mod boundary;
pub mod cli;
pub mod endo;
pub mod error;
pub mod fixpoints;
pub mod semilinear;
pub mod trace;

pub use alphabet::{Clique, IndependenceAlphabet, Letter, LetterSet};
pub use endo::{Continuity, Endomorphism};
pub use error::{Error, Result};
pub use fixpoints::{fix_generators, per_generators, ExponentRule, GeneratorSet};
pub use trace::{Distance, Trace};

pub type SemilinearSet = semilinear::SemilinearSet<u64>;
