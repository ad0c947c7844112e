//! Backends: algebraic proving and dynamic-geometry construction.

pub mod algebraize;
pub mod construct;
pub mod export;
pub mod figure;
pub mod poly;
pub mod wu;

pub use algebraize::{algebraize, AlgebraError, AlgebraicForm};
pub use construct::{compile_construction, compile_goal, ConstructError, ConstructionSequence, Locus, Step};
pub use export::{export_script, ExportError};
pub use figure::{evaluate, numeric_oracle, satisfy_checks, Coords, FigureInstance, FreeAssignment, OracleReport};
pub use poly::Poly;
pub use wu::{wu_prove, ProofResult, ProofStatus, WuError, WuLimits};
