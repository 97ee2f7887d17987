use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate critical point at {location:?} (hessian eigenvalue {eigenvalue:e})")]
    DegenerateCritical { location: Vec<f64>, eigenvalue: f64 },
    #[error("fewer than two local minima found ({found})")]
    NoMinima { found: usize },
    #[error("grid too coarse: separating values {a} and {b} closer than 4 energy quanta ({quantum:e})")]
    ResolutionTooCoarse { a: f64, b: f64, quantum: f64 },
    #[error("separating saddles {a:?} and {b:?} share the value {value} and feed overlapping components")]
    TieBreak { a: Vec<f64>, b: Vec<f64>, value: f64 },
    #[error("labeling hypothesis violated: {0}")]
    HypothesisJVideViolated(String),
    #[error("W-lift mismatch: V/2 values {v_values:?}, W values {w_values:?}")]
    MismatchDetected { v_values: Vec<f64>, w_values: Vec<f64> },

    #[error("matrix collision model unsupported here (d = {dim})")]
    MatrixKindUnsupported { dim: usize },

    #[error("linearization has spectrum within {dist:e} of the imaginary axis")]
    ImaginaryAxisSpectrum { dist: f64 },
    #[error("invariant subspace is not a graph over the base (smallest singular value {sigma:e})")]
    NotAGraph { sigma: f64 },
    #[error("{count} eigenvalues of the saddle matrix have non-positive real part")]
    MultipleNonpositiveEigenvalues { count: usize },
    #[error("leftmost eigenvalue of the saddle matrix is complex ({re} + {im}i)")]
    ComplexLeftmostEigenvalue { re: f64, im: f64 },
    #[error("saddle at {location:?} for minimum {minimum:?}: {source}")]
    Saddle {
        minimum: Vec<f64>,
        location: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("ambiguous lambda*: predictions tie in S and prefactor")]
    AmbiguousLambdaStar,

    #[error("window too small: boundary weight {weight:e} exceeds 1e-8")]
    WindowTooSmall { weight: f64 },
    #[error("hermite tail mass {ratio:e} exceeds 1e-6")]
    TailMass { ratio: f64 },
    #[error("shift {re} + {im}i is (numerically) an eigenvalue")]
    SingularShift { re: f64, im: f64 },
    #[error("iterative refinement stalled at backward error {backward:e}")]
    RefinementStalled { backward: f64 },

    #[error("eigensolver did not converge: {converged}/{wanted} after {iterations} restarts")]
    NotConverged { converged: usize, wanted: usize, iterations: usize },
    #[error("{numeric} computed small eigenvalues vs {predicted} predictions")]
    CountMismatch { numeric: usize, predicted: usize },

    #[error("saddle collars overlap for minimum at {0:?}")]
    CollarOverlap(Vec<f64>),
    #[error("quadrature grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("time stepping failed: {0}")]
    SolverFailure(String),
    #[error("fit window too short: {0}")]
    InsufficientWindow(String),
    #[error("no plateau detected for k = {k}")]
    NoPlateauDetected { k: usize },
}
