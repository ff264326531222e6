//! A system under test running as a separate executable.
//!
//! The program reads one JSON object per line on stdin and answers every
//! `tick` line with one JSON line on stdout:
//!
//! ```text
//! -> {"type":"init","case_id":3,"seed":20243,"dt":0.01,"target_speed":11.0}
//! -> {"type":"tick","frame":{...SensorFrame...},"conditions":{...}}
//! <- {"detections":[...],"trigger":false,"control":{"throttle":0.2,"brake":0.0}}
//! ```
//!
//! `detections` may be omitted, as may any control field. The program sees
//! only sensor outputs, never the simulator state.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use serde::{Deserialize, Serialize};

use super::detector::Detection;
use super::stack::{SensorFrame, Sut};
use crate::dynamics::{ControlInput, VehicleState};
use crate::error::{Error, Result};
use crate::scenario::Conditions;

#[derive(Debug, Clone, Serialize)]
pub struct ExternalInit {
    pub case_id: usize,
    pub seed: u64,
    pub dt: f64,
    pub target_speed: f64,
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Request<'a> {
    Init(&'a ExternalInit),
    Tick { frame: &'a SensorFrame, conditions: &'a Conditions },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Response {
    #[serde(default)]
    detections: Vec<Detection>,
    #[serde(default)]
    trigger: bool,
    #[serde(default)]
    control: ControlInput,
}

pub struct ExternalSut {
    child: Child,
    stdin: Option<ChildStdin>,
    stdout: BufReader<ChildStdout>,
    last: Response,
    line: String,
}

impl ExternalSut {
    pub fn spawn(command: &[String], init: &ExternalInit) -> Result<Self> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| Error::External("empty command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::External(format!("cannot start `{program}`: {e}")))?;
        let stdin = child.stdin.take();
        let stdout = BufReader::new(child.stdout.take().expect("stdout is piped"));
        let mut sut = ExternalSut { child, stdin, stdout, last: Response::default(), line: String::new() };
        sut.send(&Request::Init(init))?;
        Ok(sut)
    }

    fn send(&mut self, req: &Request) -> Result<()> {
        let stdin = self.stdin.as_mut().ok_or_else(|| Error::External("stdin closed".into()))?;
        let json = serde_json::to_string(req).map_err(|e| Error::External(e.to_string()))?;
        writeln!(stdin, "{json}")
            .and_then(|_| stdin.flush())
            .map_err(|e| Error::External(format!("write failed: {e}")))
    }

    fn receive(&mut self) -> Result<Response> {
        self.line.clear();
        let n = self
            .stdout
            .read_line(&mut self.line)
            .map_err(|e| Error::External(format!("read failed: {e}")))?;
        if n == 0 {
            return Err(Error::External("program closed its output".into()));
        }
        serde_json::from_str(self.line.trim_end())
            .map_err(|e| Error::External(format!("bad response `{}`: {e}", self.line.trim_end())))
    }
}

impl Sut for ExternalSut {
    /// One request/response round trip per tick; `plan` and `act` return
    /// the rest of that response.
    fn perceive(&mut self, frame: &SensorFrame, conditions: &Conditions) -> Result<Vec<Detection>> {
        self.send(&Request::Tick { frame, conditions })?;
        self.last = self.receive()?;
        Ok(self.last.detections.clone())
    }

    fn plan(&mut self, _detections: &[Detection]) -> Result<bool> {
        Ok(self.last.trigger)
    }

    fn act(&mut self, _trigger: bool, _state: &VehicleState) -> Result<ControlInput> {
        Ok(self.last.control)
    }
}

impl Drop for ExternalSut {
    fn drop(&mut self) {
        // Closing stdin is the shutdown signal; kill stragglers.
        drop(self.stdin.take());
        if matches!(self.child.try_wait(), Ok(None)) {
            std::thread::sleep(std::time::Duration::from_millis(20));
            if matches!(self.child.try_wait(), Ok(None)) {
                let _ = self.child.kill();
            }
        }
        let _ = self.child.wait();
    }
}
