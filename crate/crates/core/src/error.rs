use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown action family `{0}`")]
    UnknownFamily(String),
    #[error("invalid action spec: {0}")]
    InvalidSpec(String),
    #[error("generator system is inconsistent: {0}")]
    InvalidGenerators(String),
    #[error("point {0} is not in the declared state space")]
    NotInStateSpace(String),
    #[error("unknown generator or word `{0}`")]
    UnknownGenerator(String),
    #[error("arithmetic overflow while acting on {0}")]
    Overflow(String),
    #[error("truncation exceeded: {0}")]
    TruncationExceeded(String),
    #[error("order structure has wrong kind: expected {expected}")]
    WrongOrderKind { expected: &'static str },
    #[error("order is not defined on {0}")]
    OrderIncomplete(String),

    #[error("empty growth profile")]
    EmptyProfile,
    #[error("growth profile value f({n}) = {value} is below 1")]
    ProfileBelowOne { n: usize, value: f64 },

    #[error("enumeration too short: every enumerated length is <= {0}")]
    EnumerationTooShort(u64),
    #[error("invalid length assignment: {0}")]
    InvalidLengths(String),
    #[error(
        "horizon insufficient for `{generator}`: root growth never below {target:.4} \
         up to horizon {horizon} (measured floor {measured_floor:.4})"
    )]
    HorizonInsufficient {
        generator: String,
        target: f64,
        horizon: usize,
        measured_floor: f64,
    },

    #[error("domination violated: F({n}) < n^2 |B(n)| ({f_value} < {required})")]
    DominationViolated { n: usize, f_value: f64, required: f64 },
    #[error("no flattening radius within horizon {horizon} (ratio floor {ratio_floor:.6})")]
    NoFlattenRadius { horizon: usize, ratio_floor: f64 },
    #[error("ratios never enter [1/{lambda}, {lambda}] within the truncation")]
    RatiosNeverSettle { lambda: f64 },
    #[error("moderate function has no value at state {0}")]
    MissingWeight(String),
    #[error("moderateness certificate refused: {0}")]
    CertificateRefused(String),

    #[error("point {t} lies outside interval [{lo}, {hi}]")]
    OutsideInterval { t: f64, lo: f64, hi: f64 },
    #[error("degenerate interval [{lo}, {hi}]")]
    DegenerateInterval { lo: f64, hi: f64 },
    #[error("evaluable-domain miss: {0}")]
    EvaluableDomainMiss(String),
    #[error("flattening contract absent: {0}")]
    FlatteningAbsent(String),

    #[error("modulus evaluation underflow at log-argument {0}")]
    ModulusUnderflow(f64),
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("iterate budget {budget} exceeds truncation")]
    BudgetExceedsTruncation { budget: usize },

    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Module-qualified error code used by the CLI.
    pub fn code(&self) -> &'static str {
        use Error::*;
        match self {
            UnknownFamily(_) => "orbits.unknown_family",
            InvalidSpec(_) => "orbits.invalid_spec",
            InvalidGenerators(_) => "orbits.invalid_generators",
            NotInStateSpace(_) => "orbits.not_in_state_space",
            UnknownGenerator(_) => "orbits.unknown_generator",
            Overflow(_) => "orbits.overflow",
            TruncationExceeded(_) => "orbits.truncation_exceeded",
            WrongOrderKind { .. } => "orbits.wrong_order_kind",
            OrderIncomplete(_) => "realize.order_incomplete",
            EmptyProfile => "growth.empty_profile",
            ProfileBelowOne { .. } => "growth.profile_below_one",
            EnumerationTooShort(_) => "metric.enumeration_too_short",
            InvalidLengths(_) => "metric.invalid_lengths",
            HorizonInsufficient { .. } => "metric.horizon_insufficient",
            DominationViolated { .. } => "moderate.domination_violated",
            NoFlattenRadius { .. } => "moderate.no_flatten_radius",
            RatiosNeverSettle { .. } => "moderate.ratios_never_settle",
            MissingWeight(_) => "realize.missing_weight",
            CertificateRefused(_) => "moderate.certificate_refused",
            OutsideInterval { .. } => "realize.outside_interval",
            DegenerateInterval { .. } => "realize.degenerate_interval",
            EvaluableDomainMiss(_) => "realize.evaluable_domain_miss",
            FlatteningAbsent(_) => "realize.flattening_absent",
            ModulusUnderflow(_) => "regularity.modulus_underflow",
            ParameterOutOfRange(_) => "regularity.parameter_out_of_range",
            BudgetExceedsTruncation { .. } => "blowup.budget_exceeds_truncation",
            Config(_) => "cli.config",
            Io(_) => "cli.io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
