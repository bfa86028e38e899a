//! Gaussian scalar functions, quadrature, and the conditioning reductions
//! that evaluate model-cluster cell measures and interface areas.
//!
//! With `G` iid standard normal in `R^q`, the projection of `G` onto `E` is
//! standard Gaussian on `E` and `argmax_j (G_j - mean(G) - x_j)` equals
//! `argmax_j (G_j - x_j)`. Conditioning on `G_i` turns a cell measure into a
//! one-dimensional integral; conditioning on `G_i - G_j` does the same for an
//! interface area, since `(G_i + G_j)/2` is then `N(0, 1/2)` and independent
//! of the remaining coordinates.

mod mc;
mod model;
mod quadrature;
mod scalar;

pub use mc::{mc_model_cell_measure, mc_model_interface_area, Estimate, McSpec};
pub(crate) use mc::{chunked_sum, normal as mc_normal, stream_rng};
pub use model::{model_area_table, model_cell_measure, model_cell_measures, model_interface_area};
pub use quadrature::{integrate, QuadratureSpec};
pub use scalar::{cdf, density, quantile, sf, FRAC_1_SQRT_2PI};
