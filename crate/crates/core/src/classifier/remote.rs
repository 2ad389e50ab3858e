//! Client side of the wire protocol.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use super::protocol::{parse_response, to_line, write_samples, Request, Response, PROTOCOL_VERSION};
use super::{Classifier, PredictionRecord, TextItem, TextSample, TrainReport, TrainingConfig};
use crate::error::{Error, Result};

/// One synchronous request/response exchange.
pub trait Channel: Send {
    fn exchange(&mut self, request: &Request) -> Result<Response>;
}

/// Talks to a child process over its stdin/stdout.
pub struct StdioChannel {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
    program: String,
}

impl StdioChannel {
    pub fn spawn(program: &str, args: &[String], timeout: Duration) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Protocol(format!("cannot start {program}: {e}")))?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(StdioChannel {
            child,
            stdin,
            lines: rx,
            timeout,
            program: program.to_string(),
        })
    }
}

impl Channel for StdioChannel {
    fn exchange(&mut self, request: &Request) -> Result<Response> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| Error::Protocol(format!("{} is closed", self.program)))?;
        stdin
            .write_all(to_line(request).as_bytes())
            .and_then(|()| stdin.flush())
            .map_err(|e| Error::Protocol(format!("writing to {}: {e}", self.program)))?;
        loop {
            let line = match self.lines.recv_timeout(self.timeout) {
                Ok(Ok(line)) => line,
                Ok(Err(e)) => return Err(Error::Protocol(format!("reading from {}: {e}", self.program))),
                Err(RecvTimeoutError::Timeout) => {
                    return Err(Error::Protocol(format!(
                        "{} gave no response within {:?}",
                        self.program, self.timeout
                    )))
                }
                Err(RecvTimeoutError::Disconnected) => return Err(Error::Protocol(format!("{} exited", self.program))),
            };
            if !line.trim().is_empty() {
                return parse_response(&line);
            }
        }
    }
}

impl Drop for StdioChannel {
    fn drop(&mut self) {
        drop(self.stdin.take());
        let deadline = Instant::now() + Duration::from_secs(2);
        while Instant::now() < deadline {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            std::thread::sleep(Duration::from_millis(10));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// POSTs each request line to a URL; the response body is one line.
pub struct HttpChannel {
    url: String,
    agent: ureq::Agent,
}

impl HttpChannel {
    pub fn new(url: &str, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        HttpChannel {
            url: url.to_string(),
            agent,
        }
    }
}

impl Channel for HttpChannel {
    fn exchange(&mut self, request: &Request) -> Result<Response> {
        let err = |m: String| Error::Protocol(format!("{}: {m}", self.url));
        let mut resp = self
            .agent
            .post(&self.url)
            .header("content-type", "application/json")
            .send(to_line(request))
            .map_err(|e| err(e.to_string()))?;
        let status = resp.status().as_u16();
        let mut body = String::new();
        resp.body_mut()
            .as_reader()
            .read_to_string(&mut body)
            .map_err(|e| err(e.to_string()))?;
        if !(200..300).contains(&status) && body.trim().is_empty() {
            return Err(err(format!("HTTP {status}")));
        }
        parse_response(body.trim())
    }
}

/// A classifier living behind a [`Channel`]. Training data is handed over
/// as files in `work_dir`.
pub struct RemoteClassifier {
    name: String,
    channel: Box<dyn Channel>,
    work_dir: PathBuf,
    model_path: Option<PathBuf>,
    rounds: u32,
}

impl RemoteClassifier {
    pub fn new(name: &str, channel: impl Channel + 'static, work_dir: PathBuf) -> Self {
        RemoteClassifier {
            name: name.to_string(),
            channel: Box::new(channel),
            work_dir,
            model_path: None,
            rounds: 0,
        }
    }

    /// Use a model the remote side already has.
    pub fn with_model(mut self, model_path: &Path) -> Self {
        self.model_path = Some(model_path.to_path_buf());
        self
    }

    fn fail(&self, message: impl Into<String>) -> Error {
        Error::Classifier {
            model: self.name.clone(),
            message: message.into(),
        }
    }

    fn call(&mut self, request: &Request) -> Result<Response> {
        let response = self.channel.exchange(request).map_err(|e| self.fail(e.to_string()))?;
        if response.ok {
            Ok(response)
        } else {
            Err(self.fail(response.error.unwrap_or_else(|| "unspecified error".into())))
        }
    }
}

impl Classifier for RemoteClassifier {
    fn name(&self) -> &str {
        &self.name
    }

    fn train(&mut self, train: &[TextSample], val: &[TextSample], config: &TrainingConfig) -> Result<TrainReport> {
        config.validate()?;
        std::fs::create_dir_all(&self.work_dir).map_err(|e| Error::io(&self.work_dir, e))?;
        let dir = std::path::absolute(&self.work_dir).map_err(|e| Error::io(&self.work_dir, e))?;
        self.rounds += 1;
        let tag = format!("round{:03}", self.rounds);
        let train_path = dir.join(format!("{tag}-train.jsonl"));
        let val_path = dir.join(format!("{tag}-val.jsonl"));
        let model_out = dir.join(format!("{tag}-model"));
        write_samples(&train_path, train)?;
        write_samples(&val_path, val)?;
        let response = self.call(&Request::Train {
            v: PROTOCOL_VERSION,
            train_path,
            val_path,
            config: *config,
            model_out: model_out.clone(),
        })?;
        let (Some(epochs_run), Some(best_val_loss)) = (response.epochs_run, response.best_val_loss) else {
            return Err(self.fail("train response lacks epochs_run or best_val_loss"));
        };
        self.model_path = Some(model_out);
        Ok(TrainReport {
            epochs_run,
            best_val_loss,
        })
    }

    fn predict(&mut self, items: &[TextItem]) -> Result<Vec<PredictionRecord>> {
        if items.is_empty() {
            return Ok(Vec::new());
        }
        let model_path = self
            .model_path
            .clone()
            .ok_or_else(|| self.fail("predict called before train"))?;
        let response = self.call(&Request::Predict {
            v: PROTOCOL_VERSION,
            model_path,
            samples: items.to_vec(),
        })?;
        let predictions = response
            .predictions
            .ok_or_else(|| self.fail("predict response lacks predictions"))?;
        if predictions.len() != items.len() {
            return Err(self.fail(format!(
                "sent {} samples, got {} predictions",
                items.len(),
                predictions.len()
            )));
        }
        let mut out = Vec::with_capacity(items.len());
        for (item, p) in items.iter().zip(predictions) {
            if p.pair_id != item.pair_id {
                return Err(self.fail(format!(
                    "prediction order broken: expected {}, got {}",
                    item.pair_id, p.pair_id
                )));
            }
            if !(0.0..=1.0).contains(&p.score) {
                return Err(self.fail(format!("score {} for {} outside [0,1]", p.score, p.pair_id)));
            }
            let normalized = PredictionRecord::from_score(p.pair_id, p.score);
            if normalized.label != p.label {
                log::warn!(
                    "{}: label {} disagrees with score {} for {}; using the score",
                    self.name,
                    p.label,
                    p.score,
                    normalized.pair_id
                );
            }
            out.push(normalized);
        }
        Ok(out)
    }
}
