//! Low-pass filtering, fixed-length segmentation and phase labelling.

mod filter;
mod segment;

pub use filter::{butterworth_sections, filter_signal, lowpass, magnitude_response, Biquad, FilterConfig};
pub use segment::{label_phases, phase_of, segment, Phase, Segment, SegmentSet, SegmentationConfig};
