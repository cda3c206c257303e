//! Monte Carlo machinery: data, mask and error generators, replicate
//! driver, empirical tails, ψ-norm and MGF checks, threshold calibration and
//! family-wise error estimation.

pub mod bilinear;
pub mod generate;
pub mod mgf;
pub mod model;
pub mod psi;
pub mod scenario;
pub mod tail;

pub use generate::{gen_errors, gen_masks, gen_population, RngStreams};
pub use model::{
    ErrorDependence, JointPreset, MeasurementErrorSpec, MissingSpec, PopulationFamily,
    PopulationSpec,
};
pub use scenario::{calibrate_constant, estimate_fwer, Observation, Scenario};
pub use tail::{empirical_tail, SimulationReport};
