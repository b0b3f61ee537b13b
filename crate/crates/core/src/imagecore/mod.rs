//! Raster containers, Gaussian kernels, clamp-to-edge convolution and file IO.

mod convolve;
mod io;
mod kernel;
mod raster;

pub use convolve::{convolve, convolve_into, Convolver};
pub use io::{
    decode_rgb_png, encode_rgb_png, read_depth, read_rgb, write_depth, write_rgb, DepthFormat,
    METERS_PER_UNIT_KEY,
};
pub use kernel::{gaussian_kernel, gaussian_weights_1d, Kernel2D};
pub use raster::{DepthMap, GridShape, HeightMap, TactileImage};
