use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("group closure exceeds the element bound of {bound}")]
    GroupTooLarge { bound: usize },
    #[error("fragment too large for explicit automorphism search ({points} points, cap {cap})")]
    FragmentTooLarge { points: usize, cap: usize },
    #[error("subgroup is not normal")]
    NotNormal,
    #[error("group is not regular on its domain")]
    NotRegular,
    #[error("group is not dihedral")]
    NotDihedral,
    #[error("rotation/reflection split is undefined for D_n with n < 3 (n = {n})")]
    DegenerateN { n: usize },
    #[error("bad factorization: {0}")]
    BadFactorization(String),
    #[error("enumeration too large: |G1|*|G2| = {size} exceeds bound {bound}")]
    EnumerationTooLarge { size: usize, bound: usize },
    #[error("classification theorem violated: no case applies for {witness}")]
    NoCaseApplies { witness: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("order does not refine the color preorder")]
    OrderNotRefining,
    #[error("pipeline order violation: {0}")]
    PipelineOrderViolation(String),
    #[error("variable classes do not form a rooted forest: {0}")]
    NotATree(String),
    #[error("equation uses classes that are not on one root-to-leaf path: {0}")]
    PathViolation(String),
    #[error("inconsistent cyclic constraint on class {0}")]
    InconsistentCyclic(String),
    #[error("system is not weakly global: {0}")]
    NotWeaklyGlobal(String),
    #[error("global class precondition violated: {0}")]
    GlobalClassViolation(String),
    #[error("equation systems are not compatible for union: {0}")]
    NotCompatible(String),
    #[error("instance too large for brute-force search ({0})")]
    TooLarge(String),
    #[error("group is not abelian")]
    NotAbelian,
    #[error("structure does not have abelian transitive colors: {0}")]
    NotAbelianColors(String),
    #[error("initial equation system is infeasible")]
    InitialInfeasible,
    #[error("structure does not have dihedral colors: {0}")]
    NotDihedralColors(String),
    #[error("border color class is not abelian: class {0}")]
    BorderNotAbelian(usize),
    #[error("orientation propagation could not reach class {0}")]
    PropagationStuck(usize),
    #[error("reflection vector probe infeasible at border step {0}")]
    ProbeInfeasible(usize),
    #[error("structure contains a double CFI type and cannot be canonized")]
    NotDoubleCfiFree,
    #[error("internal infeasibility: {0}")]
    InternalInfeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
