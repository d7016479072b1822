//! Accuracy metrics, synthetic ground truth and corpus evaluation.

pub mod corpus;
pub mod metrics;
pub mod synth;

pub use corpus::{evaluate_image, evaluate_synthetic, list_directory, list_images, map_indexed, truth_path, run_corpus, CorpusSource, SynthPlan};
pub use metrics::{accuracy_error, accuracy_rate, EvalRecord, EvalReport, GeometryError, SUCCESS_THRESHOLD};
pub use synth::{generate_eye, Eyelid, GroundTruth, Levels, Noise, NoiseKind, Reflections, SyntheticEye, SyntheticEyeSpec};
