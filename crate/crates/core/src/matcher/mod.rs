//! Descriptors, the `APDS` codec, exact search and prompt selection.

pub mod codec;
pub mod descriptor;
pub mod search;
pub mod select;

pub use codec::{read_descriptors, write_descriptors};
pub use descriptor::{cosine, thumbnail_descriptor, DescriptorSet};
pub use search::{aggregate_max, format_sig, read_matches, search_topk, write_matches, Hit, MatchList, QueryMatches};
pub use select::{read_assignment, select_prompts, write_assignment, AssignedPair, PromptAssignment, SelectInputs, SelectionMode};
