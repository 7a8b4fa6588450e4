//! Pointwise curvature engine for conformally recurrent pseudo-Riemannian
//! metrics.
//!
//! Metrics are evaluated with third-order jets, curvature is assembled from
//! the exact partials, and every identity is reported as a scaled defect.
//! All numeric types are generic over [`Scalar`]; the `*F64` aliases fix
//! the scalar to `f64`.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod curvature;
pub mod jets;
pub mod linalg;
pub mod lorentz;
pub mod metrics;
pub mod recurrence;
pub mod scalar;
pub mod synthetic;
pub mod tensor;
pub mod weylops;

pub use curvature::{conventions, Conventions, CurvatureError, CurvaturePack};
pub use jets::{Jet3, JetError};
pub use lorentz::{ClassificationFlags, LorentzError};
pub use metrics::{
    catalog, evaluate, signature, FunctionForm, Inertia, MetricAtPoint, MetricError, MetricKind, MetricSpec,
};
pub use recurrence::{Applicability, RecurrenceError, RecurrenceResult};
pub use scalar::Scalar;
pub use tensor::{Tensor, TensorError, Variance};
pub use weylops::{ElectricTensor, ParallelTensor, WeylOpsError};

pub type Real = f64;
pub type Jet3F64 = Jet3<f64>;
pub type TensorF64 = Tensor<f64>;
pub type MetricAtPointF64 = MetricAtPoint<f64>;
pub type CurvaturePackF64 = CurvaturePack<f64>;
pub type RecurrenceResultF64 = RecurrenceResult<f64>;
pub type ElectricTensorF64 = ElectricTensor<f64>;
pub type ParallelTensorF64 = ParallelTensor<f64>;
