//! Numerical kernels used by the physics modules.

mod lsq;
mod ode;
mod optimize;
mod quad;
mod roots;
mod special;

pub use lsq::{levenberg_marquardt, LsqOptions, LsqProblem, LsqSolution};
pub use ode::{dormand_prince, OdeOptions, OdeSolution};
pub use optimize::{coordinate_descent, golden_section_max, BoxBound, SearchResult};
pub use quad::{integrate, QuadOptions, QuadResult};
pub use roots::{bisect, brent};
pub use special::{ellipk, fermi};
