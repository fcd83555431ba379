use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix has a non-finite entry")]
    NonFinite,
    #[error("singular group element (|det| = {0:e})")]
    Singular(f64),
    #[error("matrix is not trace free (|tr| = {0:e})")]
    NotTraceFree(f64),
    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("lift is not unit norm at node ({i}, {j}): |f| = {norm}")]
    NotUnitNorm { i: usize, j: usize, norm: f64 },
    #[error("complex point detected at node ({i}, {j}): a = {a:e}, b = {b:e}")]
    ComplexPointDetected { i: usize, j: usize, a: f64, b: f64 },
    #[error("lift is not conformal at node ({i}, {j}): defect {defect:e}")]
    NonConformal { i: usize, j: usize, defect: f64 },
    #[error("cube-root phase unwrapping failed at node ({i}, {j}): jump {jump:.3} rad")]
    PhaseUnwrapFailure { i: usize, j: usize, jump: f64 },
    #[error("Maurer-Cartan cross-check failed: {what} deviates by {dev:e} (tolerance {tol:e})")]
    CrossCheckFailure { what: String, dev: f64, tol: f64 },
    #[error("frame is not in the det = 1 gauge (max |det F - 1| = {0:e})")]
    InconsistentGauge(f64),
    #[error("Maurer-Cartan entry {entry} vanishes at node ({i}, {j}): |u| = {value:e}")]
    VanishingEntry {
        entry: &'static str,
        i: usize,
        j: usize,
        value: f64,
    },
    #[error("Maurer-Cartan form has entry {entry} of size {value:e} outside its sparsity pattern")]
    ShapeViolation { entry: &'static str, value: f64 },

    #[error("loops are incompatible: {0}")]
    IncompatibleLoops(String),
    #[error("cannot evaluate a loop with negative degrees at lambda = 0")]
    ZeroEvaluation,
    #[error("truncation dropped a tail of norm {dropped:e} (budget {budget:e})")]
    TailOverflow { dropped: f64, budget: f64 },
    #[error("loop lies outside the big cell (condition number {0:e})")]
    OutsideBigCell(f64),
    #[error("Iwasawa factorization did not converge: {0}")]
    FactorizationDiverged(String),

    #[error("potential term of degree {degree} violates the grading (defect {defect:e})")]
    GradingViolation { degree: i32, defect: f64 },
    #[error("potential has invalid degree structure: {0}")]
    DegreeViolation(String),
    #[error("ODE integration diverged (norm {0:e})")]
    StepDiverged(f64),
    #[error("spectral parameter {0} is not on the unit circle")]
    NotOnCircle(num_complex::Complex64),
    #[error("extended frame carries no generating loop field")]
    MissingProvenance,

    #[error("flag point variant mismatch: {0}")]
    VariantMismatch(String),
    #[error("affine chart is singular at node ({i}, {j})")]
    ChartSingular { i: usize, j: usize },

    #[error("unknown catalog entry `{0}`")]
    UnknownCatalog(String),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular(_)
                | Error::ComplexPointDetected { .. }
                | Error::NonConformal { .. }
                | Error::PhaseUnwrapFailure { .. }
                | Error::CrossCheckFailure { .. }
                | Error::InconsistentGauge(_)
                | Error::VanishingEntry { .. }
                | Error::ShapeViolation { .. }
                | Error::TailOverflow { .. }
                | Error::OutsideBigCell(_)
                | Error::FactorizationDiverged(_)
                | Error::StepDiverged(_)
                | Error::ChartSingular { .. }
        )
    }
}
