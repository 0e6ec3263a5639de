//! Automatic evaluation: summary ROUGE, entity-planning ROUGE, EntF1, EntPrec and length.

pub mod entity;
pub mod porter;
pub mod report;
pub mod rouge;

pub use entity::{
    avg_length, ent_f1, ent_prec, entity_set, plan_rouge, summary_rouge, EntF1, EntPrec, EntityCounts,
    EntityScore, SupportCounts,
};
pub use report::{evaluate, Bootstrap, EvalConfig, EvalReport};
pub use rouge::{rouge_l, rouge_n, tokenize, RougeScore, RougeSet};
