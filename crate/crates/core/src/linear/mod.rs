//! Fourier-side analysis of the linearized system: eigenvalues, Green's matrix,
//! decay-rate tables and quadrature audits of the linear decay estimates.

pub mod convolution;
pub mod green;
pub mod pointwise;
pub mod quadrature;
pub mod radial;
pub mod rates;

pub use convolution::{convolution_inequality_check, ConvolutionCase, ConvolutionReport};
pub use green::{
    classify_regime, critical_wavenumber, eigenvalues, generator, green_entries, green_matrix, GreenSample, Regime,
};
pub use pointwise::{default_audit_grid, pointwise_bound_audit, PointwiseOptions, PointwiseReport};
pub use radial::{
    green_decay_check, heat_decay_check, linear_decay_norms, lower_bound_audit, Channel, DecayNorms, ExponentCheck,
    HeatReport, LowerBoundReport, NormKind, RadialData,
};
pub use rates::{exact_rates, rate_table, ExactRates, RateTable};
