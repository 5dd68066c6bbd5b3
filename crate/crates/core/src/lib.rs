pub mod datafmla;
pub mod elastic;
pub mod heap;
pub mod lang;
pub mod oracle;
pub mod qsda;
pub mod transformers;
pub mod strandout;
pub mod engine;
