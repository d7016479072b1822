//! Image representation, I/O, morphology and convolution machinery.

pub mod convolve;
pub mod io;
pub mod kernel;
pub mod morphology;
pub mod raster;

pub use convolve::{convolve, convolve_direct, rescale01, smooth_separable, Samples};
pub use io::{load_image, load_mask, save_gray_png, save_mask_png};
pub use kernel::{filter_size, gaussian_kernel, gaussian_taps, log_kernel, log_taps, Kernel2D, SeparableTerm};
pub use morphology::{dilate, erode, median_filter, morph_open, StructuringElement};
pub use raster::{EdgeMap, Field, GrayImage, Mask};
