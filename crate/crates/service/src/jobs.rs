//! Background curation jobs, polled by id.

use std::collections::BTreeMap;
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::Serialize;
use serde_json::Value;

use glossgraph_core::curation::CurationPass;

pub type JobId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Job {
    pub job_id: JobId,
    pub pass: CurationPass,
    pub dry_run: bool,
    pub submitted_by: String,
    pub status: JobStatus,
    pub submitted_at: DateTime<Utc>,
    pub finished_at: Option<DateTime<Utc>>,
    /// The curation report once done, the error body once failed.
    pub result: Option<Value>,
    /// Graph version right after the job ran.
    pub graph_version: Option<u64>,
}

#[derive(Debug, Default)]
pub struct Jobs {
    inner: Mutex<(JobId, BTreeMap<JobId, Job>)>,
}

impl Jobs {
    pub fn new() -> Self {
        Jobs::default()
    }

    pub fn submit(&self, pass: CurationPass, dry_run: bool, submitted_by: &str) -> Job {
        let mut inner = self.inner.lock().expect("job table lock");
        inner.0 += 1;
        let job = Job {
            job_id: inner.0,
            pass,
            dry_run,
            submitted_by: submitted_by.to_string(),
            status: JobStatus::Queued,
            submitted_at: Utc::now(),
            finished_at: None,
            result: None,
            graph_version: None,
        };
        inner.1.insert(job.job_id, job.clone());
        job
    }

    pub fn start(&self, id: JobId) {
        self.update(id, |j| j.status = JobStatus::Running);
    }

    pub fn finish(&self, id: JobId, outcome: Result<Value, Value>, graph_version: u64) {
        self.update(id, |j| {
            let (status, result) = match outcome {
                Ok(v) => (JobStatus::Done, v),
                Err(e) => (JobStatus::Failed, e),
            };
            j.status = status;
            j.result = Some(result);
            j.graph_version = Some(graph_version);
            j.finished_at = Some(Utc::now());
        });
    }

    fn update(&self, id: JobId, f: impl FnOnce(&mut Job)) {
        if let Some(j) = self.inner.lock().expect("job table lock").1.get_mut(&id) {
            f(j);
        }
    }

    pub fn get(&self, id: JobId) -> Option<Job> {
        self.inner.lock().expect("job table lock").1.get(&id).cloned()
    }
}
