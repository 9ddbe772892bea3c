//! Citation-network datasets: ingestion, canonical serialization, and
//! labeled/unlabeled split sampling.

mod dataset;
mod io;
mod split;

pub use dataset::{CitationDataset, SplitState};
pub use io::{convert_pubmed, load_canonical, load_linqs, save_canonical};
pub use split::{sample_split, SplitSpec};
