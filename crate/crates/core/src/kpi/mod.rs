//! Per-tick KPIs, collision tracking, verdicts and campaign reports.

mod record;
mod report;
mod resources;

pub use record::{
    distance_to_collision, parse_kpi_csv, verdict, write_kpi_csv, CollisionTracker, KpiRecord, TestVerdict,
    DTC_CAP, KPI_HEADER,
};
pub use report::{aggregate_counts, aggregate_results, speedup_report, BatchSummary, CampaignReport, SpeedupReport, SutRow};
pub use resources::{peak_sample, ResourceSample};
