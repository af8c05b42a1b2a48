//! Signal model: constellations, Rayleigh channels and the real-valued
//! equivalent of the complex MIMO system.

mod channel;
mod constellation;

pub use channel::{draw_channel, noise_variance, realize, stack, to_real, unstack, ComplexSystemModel, RealSystemModel};
pub use constellation::{demap_symbols, make_constellation, map_bits, Constellation, Modulation};
