//! Soft-multiplier synthesis and Double-Duty logic-block modeling.

pub mod error;
pub mod netlist;
pub mod ppgen;
pub mod reduce;
pub mod lutmap;
pub mod arch;
pub mod pack;
pub mod analysis;
pub mod harness;
pub mod verify;

pub use error::{Error, Result};
pub use netlist::{Netlist, NodeId, NodeKind, SignalId};
pub use analysis::{analyze, area, critical_path, Report};
pub use arch::{load_arch, mode_legal, AlmMode, ArchSpec, ArchVariant};
pub use harness::{gen_stress_circuit, run_artificial_stress, run_fill_stress, run_sweep, StressCircuitSpec, SweepSpec};
pub use lutmap::{map_to_luts, MappedNetlist};
pub use pack::{legality_check, pack, PackOptions, Placement};
pub use ppgen::{generate_generic, generate_unrolled, Multiplication};
pub use reduce::{best_placement, reduce, Algorithm, Reduction};
