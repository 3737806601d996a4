pub mod quadrature;
pub mod rng;
pub mod roots;
pub mod special;

pub use quadrature::{integrate, integrate_box, integrate_with, Domain, QuadConfig, QuadratureResult};
pub use rng::{rng_stream, RngStream};
pub use roots::{bracket_positive, find_root, find_root_with, Bracket};
