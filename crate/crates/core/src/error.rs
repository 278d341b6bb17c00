use thiserror::Error;

use crate::netlist::NodeId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing value for input bus `{0}`")]
    MissingInput(String),
    #[error("value {value} does not fit input bus `{bus}` of width {width}")]
    ValueTooWide { bus: String, width: usize, value: u128 },
    #[error("bus `{bus}` is {width} bits wide; simulation supports at most 128")]
    BusTooWide { bus: String, width: usize },
    #[error("netlist has a combinational cycle through node {0}")]
    Cycle(NodeId),
    #[error("invalid netlist: {0}")]
    InvalidNetlist(String),
    #[error("unsupported netlist schema version {0}")]
    SchemaVersion(u32),
    #[error("primary {0} bus has no name")]
    UnnamedBus(&'static str),
    #[error("BLIF line {line}: {msg}")]
    Blif { line: usize, msg: String },

    #[error("multiplicand width must be at least one bit")]
    ZeroWidth,
    #[error("constant {constant:#x} needs more than {max_bits} bits")]
    ConstantTooWide { constant: u64, max_bits: u32 },

    #[error("row selection needs at least two rows, got {0}")]
    TooFewRows(usize),
    #[error("unknown reduction algorithm `{0}`")]
    UnknownAlgorithm(String),

    #[error("unsupported LUT size {0}, expected 4, 5 or 6")]
    LutSize(usize),
    #[error("gate node {node} has fan-in {fanin}, above k = {k}")]
    FaninExceedsK { node: NodeId, fanin: usize, k: usize },

    #[error("unknown architecture variant `{0}`")]
    UnknownVariant(String),
    #[error("unknown architecture field `{0}`")]
    UnknownField(String),
    #[error("architecture field `{field}` must be non-negative, got {value}")]
    NegativeField { field: String, value: f64 },
    #[error("inconsistent architecture: {0}")]
    InconsistentArch(String),

    #[error("mapped netlist still contains non-LUT logic at node {0}")]
    UnmappedLogic(NodeId),
    #[error("base circuit does not fit on the device: {0} elements unplaced")]
    BaseUnpackable(usize),
    #[error("invalid stress specification: {0}")]
    InvalidStressSpec(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
