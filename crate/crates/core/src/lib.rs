pub mod asymptotics;
pub mod error;
pub mod hankel;
pub mod identities;
pub mod moments;
pub mod numerics;
pub mod polynomials;
pub mod recurrence;
pub mod scalar;

pub use error::{Error, Result};
pub use moments::WeightParams;
pub use numerics::{Certified, PrecisionPolicy};
pub use scalar::{Field, Real};

/// Multiprecision real used for every certified computation.
pub type Mpf = rug::Float;
/// Certified multiprecision value.
pub type CertifiedReal = Certified<Mpf>;
/// Recurrence table at certified multiprecision.
pub type MpRecurrenceTable = recurrence::RecurrenceTable<Mpf>;
/// Recurrence table in double precision, without escalation.
pub type F64RecurrenceTable = recurrence::RecurrenceTable<f64>;
