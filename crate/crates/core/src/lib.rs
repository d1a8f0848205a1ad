//! Cortico-muscular coherence (CMC) between EEG and EMG during grasping,
//! band features, and SVM classification of grasp conditions.
//!
//! The pipeline: band-pass and rectify EMG, locate the grip from the
//! smoothed envelope, cut EEG/EMG segments around it, estimate Welch
//! coherence, average it over standard frequency bands, and cross-validate
//! an SMO-trained SVM on the resulting features.

pub mod commands;
pub mod config;
pub mod experiment;
pub mod ingest;
pub mod labels;
pub mod segmentation;
pub mod sigcore;
pub mod spectral;
pub mod svm;
pub mod synth;

pub use experiment::{Experiment, PipelineConfig, Task, TaskSpec};
pub use ingest::{load_dataset, Dataset, DatasetManifest};
pub use labels::{Condition, Muscle, Surface, Weight};
pub use segmentation::SegmentDuration;
pub use sigcore::{BandPass, BandPassSpec, TimeSeries};
pub use spectral::{coherence, CmcSpectrum, WelchConfig, STANDARD_BANDS};
pub use svm::{cross_validate, train_smo, KernelChoice, KernelSpec, SmoParams, SvmModel};
