//! Global identification checks for structural VARs under zero restrictions.
//!
//! The classical counting rule (`q_j = n - j` restrictions on column j) is
//! necessary but not sufficient: a restriction implied by the others adds no
//! information. This crate decides exact identification by building the
//! rotation from the recursive structural point column by column and checking
//! that each column's constraint stack has rank `n - 1` at randomly drawn
//! reduced-form points.
//!
//! ```
//! use svar_ident::{compile, parse_spec, check_exact_identification, IdentifierConfig, SamplerConfig, Verdict};
//!
//! let spec = parse_spec("n = 2\nblock A0\n  x x\n  0 x\n").unwrap();
//! let compiled = compile(&spec);
//! let sampler = SamplerConfig::new(spec.dims(), 0);
//! let report = check_exact_identification(&compiled, &sampler, 5, &IdentifierConfig::default()).unwrap();
//! assert_eq!(report.verdict, Verdict::ExactlyIdentified);
//! ```

pub mod error;
pub mod identifier;
pub mod numkernel;
pub mod restrictions;
pub mod sampler;
pub mod svar;

pub use error::{Error, Result, SpecError};
pub use identifier::{
    check_exact_identification, construct_rotation, count_condition, explain_redundancy,
    nonredundancy_at, q_tilde, rank_cross_check, rank_cross_check_at_draw, sign_normalize,
    ColumnDiagnostic, ColumnStatus, CountCondition, DrawRecord, IdentificationReport,
    IdentifierConfig, ImpliedRestriction, OnRedundancy, RankCrossCheck, RedundancyExplanation,
    RotationResult, Verdict, DEFAULT_DRAWS, IDENTIFIER_RANK_TOL, RESTRICTED_RESIDUAL_TOL,
};
pub use numkernel::{Matrix, NullStatus, NullVectorBackend, RankTolerance, Vector};
pub use restrictions::{
    assemble_f, compile, parse_spec, restriction_residual, BlockId, Cell, CellRef,
    CompiledRestrictions, RestrictionBlock, RestrictionSpec,
};
pub use sampler::{draw_reduced_form, SamplerConfig};
pub use svar::{
    baseline_structural, contemporaneous_ir, ir_horizon, to_reduced_form, ModelDims,
    ReducedFormParams, StructuralParams,
};
