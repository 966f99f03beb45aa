use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside its admissible range.
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    /// An observation was fed to an arm whose test already stopped.
    UpdateAfterDiscard {
        at_pull: u64,
    },
    IndexOutOfRange {
        index: usize,
        len: usize,
    },
    /// Every arm has been discarded.
    EmptySurvivingSet,
    /// A wrapped selection policy named an arm outside the surviving set.
    PolicyViolation {
        arm: usize,
    },
    /// The safety ratio is undefined when no arm is safe.
    NoSafeArms,
    /// The requested step was not kept by the trace's recording mode.
    StepNotRecorded {
        t: u64,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter {
                name,
                value,
                reason,
            } => write!(f, "invalid parameter `{name}` = {value}: {reason}"),
            Error::UpdateAfterDiscard { at_pull } => {
                write!(f, "arm was already discarded at pull {at_pull}")
            }
            Error::IndexOutOfRange { index, len } => {
                write!(f, "arm index {index} out of range for {len} arms")
            }
            Error::EmptySurvivingSet => f.write_str("surviving set is empty"),
            Error::PolicyViolation { arm } => {
                write!(
                    f,
                    "policy selected arm {arm}, which is not in the surviving set"
                )
            }
            Error::NoSafeArms => f.write_str("safety ratio undefined: no safe arms"),
            Error::StepNotRecorded { t } => write!(f, "step {t} was not recorded"),
        }
    }
}

impl core::error::Error for Error {}
