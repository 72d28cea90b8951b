pub mod barriers;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod params;
pub mod qmeans;
pub mod quadrature;
pub mod radial;
pub mod special_fn;
