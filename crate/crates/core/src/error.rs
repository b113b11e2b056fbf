use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("register of {qubits} qubits exceeds the cap of {cap}")]
    RegisterTooLarge { qubits: usize, cap: usize },
    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },
    #[error("duplicate qubit index {0}")]
    DuplicateQubit(usize),
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("operator {label} must be Hermitian and unitary")]
    NotHermitianUnitary { label: String },
    #[error("Kraus completeness violated: max |sum K^dag K - I| = {defect:e} (tolerance {tolerance:e})")]
    Completeness { defect: f64, tolerance: f64 },
    #[error("channel intervals do not chain: earlier ends at {earlier_end}, later starts at {later_start}")]
    IntervalMismatch { earlier_end: f64, later_start: f64 },
    #[error("negative branch probability {0:e}")]
    NegativeProbability(f64),
    #[error("Choi matrix not positive: smallest eigenvalue {min_eigenvalue:e}")]
    ChoiNotPositive { min_eigenvalue: f64 },
    #[error("negative argument {value:e} under square root in `{expr}`")]
    NegativeRadicand { expr: &'static str, value: f64 },
    #[error("no coefficient variant of the integrated map passed validation: {0}")]
    NoValidCoefficients(String),
    #[error("invalid protocol: {0}")]
    InvalidSpec(String),
    #[error("missing auxiliary quantity {0}")]
    MissingAux(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("cannot parse Pauli string `{0}`")]
    PauliParse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
