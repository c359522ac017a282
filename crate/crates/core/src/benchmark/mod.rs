//! Multi-object search benchmark: episode generation, a shortest-path
//! oracle, the closed-loop runner, metrics and reports.

pub mod episode;
pub mod metrics;
pub mod oracle;
pub mod report;
pub mod results;
pub mod runner;

pub use episode::{generate_episodes, generate_worlds, load_dataset, write_dataset, Dataset, Episode, EpisodeParams};
pub use metrics::{compute_metrics, per_object_breakdown, EpisodeResult, Metrics, ObjectBreakdown, ObjectResult, Outcome};
pub use oracle::{category_targets, oracle_shortest_path};
pub use report::{build_report, write_bar_chart, Report};
pub use results::{read_result_log, write_result_log, ResultRecord};
pub use runner::Runner;
