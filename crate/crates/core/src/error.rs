use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid angular momentum arguments: {0}")]
    AngularArgs(String),

    #[error("invalid molecule: {0}")]
    Molecule(String),

    #[error("molecule file line {line}: {msg}")]
    MoleculeFile { line: usize, msg: String },

    #[error("invalid basis request: {0}")]
    Basis(String),

    #[error("sector/field inconsistency: {0}")]
    SectorPolicy(String),

    #[error("invalid Hamiltonian parameters: {0}")]
    Hamiltonian(String),

    #[error("eigensolver failed to converge: {unconverged} of {requested} pairs unconverged after {iterations} iterations")]
    NotConverged {
        requested: usize,
        unconverged: usize,
        iterations: usize,
    },

    #[error("solver error: {0}")]
    Solver(String),

    #[error("observable error: {0}")]
    Observable(String),

    #[error("invalid sweep plan: {0}")]
    Sweep(String),

    #[error("sweep point {index} (param = {param}): {source}")]
    SweepPoint {
        index: usize,
        param: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("matrix file: {0}")]
    MatrixFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
