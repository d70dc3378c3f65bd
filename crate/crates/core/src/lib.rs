//! Safety wrapper for black-box classifiers.
//!
//! A wrapped classifier's every prediction is scored by an ensemble of
//! uncertainty measures ([`uncertainty`]). A binary adjudicator
//! ([`adjudicator`]) maps the resulting measure vector to a pass/omit
//! verdict, and the [`wrapper`] turns suspected misclassifications into
//! omissions. [`wrapper::WrapperMetrics`] accounts for accuracy, residual
//! misclassification and omission probabilities of the wrapped component.
//!
//! ```no_run
//! use sprout_core::prelude::*;
//!
//! let data = make_blobs(2000, 4, 2, 1.5, 7).unwrap();
//! let (train, test) = split(&data, &SplitSpec::new(0.5, 7)).unwrap();
//! let (fit_rows, _) = adjudication_split(&train, 0.3, 7).unwrap();
//! let clf = ClassifierConfig::GaussianNb.fit(&fit_rows, 7).unwrap();
//! let wrapper = SproutWrapper::build(
//!     &train,
//!     clf,
//!     &reference_measures(),
//!     AdjudicatorSource::train(AdjudicatorConfig::default()),
//!     7,
//! )
//! .unwrap();
//! let report = wrapper.evaluate(&test, Execution::default()).unwrap();
//! println!("{}", report.metrics);
//! ```

pub mod adjudicator;
pub mod autoencoder;
pub mod classifiers;
pub mod data;
pub mod error;
pub mod neighbors;
pub mod par;
pub mod rng;
pub mod uncertainty;
pub mod wrapper;

pub use error::{Error, Result};

/// The types and functions most programs need.
pub mod prelude {
    pub use crate::adjudicator::{
        train_adjudicator, AdjudicationExample, AdjudicatorConfig, BinaryAdjudicator,
        BinaryConfidenceScore, Verdict,
    };
    pub use crate::classifiers::{Classifier, ClassifierConfig, Model, ProbabilityVector};
    pub use crate::data::{
        load_csv, make_blobs, split, write_csv, Dataset, SplitSpec, Standardizer,
    };
    pub use crate::error::{Error, Result};
    pub use crate::par::Execution;
    pub use crate::uncertainty::{
        compute_vector, fit_measures, reference_measures, MeasureConfig, MeasureLayout,
        MeasureVector, NamedMeasure,
    };
    pub use crate::wrapper::{
        adjudication_split, omission_quality, AdjudicatorSource, SproutWrapper, WrapperMetrics,
        WrapperOutput,
    };
}
