//! Classifier wire protocol, version 1.
//!
//! JSON Lines over a child process's stdio or HTTP request bodies, one
//! message per line. Every message carries `"v": 1`; unknown fields are
//! ignored.
//!
//! ```text
//! {"op":"train","v":1,"train_path":..,"val_path":..,"config":{..},"model_out":..}
//! {"v":1,"ok":true,"epochs_run":3,"best_val_loss":0.21}
//! {"op":"predict","v":1,"model_path":..,"samples":[{"pair_id":..,"masked":..}]}
//! {"v":1,"ok":true,"predictions":[{"pair_id":..,"label":1,"score":0.93}]}
//! {"v":1,"ok":false,"error":".."}
//! ```
//!
//! Training and validation files are JSON Lines of
//! `{"pair_id", "masked", "label"}`.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{train_baseline, BaselineModel, PredictionRecord, TextItem, TextSample, TrainReport, TrainingConfig};
use crate::error::{Error, Result};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Request {
    Train {
        v: u32,
        train_path: PathBuf,
        val_path: PathBuf,
        config: TrainingConfig,
        model_out: PathBuf,
    },
    Predict {
        v: u32,
        model_path: PathBuf,
        samples: Vec<TextItem>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub v: u32,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs_run: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_val_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictions: Option<Vec<PredictionRecord>>,
}

impl Response {
    fn empty(ok: bool) -> Self {
        Response {
            v: PROTOCOL_VERSION,
            ok,
            error: None,
            epochs_run: None,
            best_val_loss: None,
            predictions: None,
        }
    }

    pub fn trained(report: TrainReport) -> Self {
        Response {
            epochs_run: Some(report.epochs_run),
            best_val_loss: Some(report.best_val_loss),
            ..Self::empty(true)
        }
    }

    pub fn predicted(predictions: Vec<PredictionRecord>) -> Self {
        Response {
            predictions: Some(predictions),
            ..Self::empty(true)
        }
    }

    pub fn failure(message: impl Into<String>) -> Self {
        Response {
            error: Some(message.into()),
            ..Self::empty(false)
        }
    }
}

fn check_version(value: &serde_json::Value) -> std::result::Result<(), String> {
    match value.get("v") {
        None => Err("missing protocol version field \"v\"".into()),
        Some(v) if v.as_u64() == Some(u64::from(PROTOCOL_VERSION)) => Ok(()),
        Some(v) => Err(format!("unsupported protocol version {v}; expected {PROTOCOL_VERSION}")),
    }
}

fn parse_message<T: serde::de::DeserializeOwned>(line: &str) -> std::result::Result<T, String> {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    check_version(&value)?;
    serde_json::from_value(value).map_err(|e| format!("invalid message: {e}"))
}

pub fn parse_request(line: &str) -> Result<Request> {
    parse_message(line).map_err(Error::Protocol)
}

pub fn parse_response(line: &str) -> Result<Response> {
    parse_message(line).map_err(Error::Protocol)
}

/// Serialize a message as one line, newline included.
pub fn to_line<T: Serialize>(message: &T) -> String {
    let mut s = serde_json::to_string(message).expect("protocol messages serialize");
    s.push('\n');
    s
}

pub fn write_samples(path: &Path, samples: &[TextSample]) -> Result<()> {
    let mut out = String::new();
    for s in samples {
        out.push_str(&to_line(s));
    }
    crate::corpus::write_atomic(path, out.as_bytes())
}

pub fn read_samples(path: &Path) -> Result<Vec<TextSample>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut samples = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        samples.push(serde_json::from_str(&line).map_err(|e| Error::format(path, i + 1, e))?);
    }
    Ok(samples)
}

/// Server side of the protocol.
pub trait Backend {
    fn train(
        &mut self,
        train: &[TextSample],
        val: &[TextSample],
        config: &TrainingConfig,
        model_out: &Path,
    ) -> Result<TrainReport>;

    fn predict(&mut self, model_path: &Path, samples: &[TextItem]) -> Result<Vec<PredictionRecord>>;
}

pub fn handle(backend: &mut dyn Backend, request: &Request) -> Response {
    let outcome = match request {
        Request::Train {
            train_path,
            val_path,
            config,
            model_out,
            ..
        } => config
            .validate()
            .and_then(|()| Ok((read_samples(train_path)?, read_samples(val_path)?)))
            .and_then(|(train, val)| backend.train(&train, &val, config, model_out))
            .map(Response::trained),
        Request::Predict {
            model_path, samples, ..
        } => backend.predict(model_path, samples).map(Response::predicted),
    };
    outcome.unwrap_or_else(|e| Response::failure(e.to_string()))
}

/// Answer requests line by line until end of input. Malformed requests get
/// an error response; the loop keeps going.
pub fn serve(input: impl BufRead, mut output: impl Write, backend: &mut dyn Backend) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = match parse_request(&line) {
            Ok(request) => handle(backend, &request),
            Err(e) => Response::failure(e.to_string()),
        };
        output.write_all(to_line(&response).as_bytes())?;
        output.flush()?;
    }
    Ok(())
}

/// Protocol backend around the native baseline. Models are saved as JSON
/// at `model_out` and cached after first load.
#[derive(Default)]
pub struct BaselineBackend {
    loaded: HashMap<PathBuf, BaselineModel>,
}

impl Backend for BaselineBackend {
    fn train(
        &mut self,
        train: &[TextSample],
        val: &[TextSample],
        config: &TrainingConfig,
        model_out: &Path,
    ) -> Result<TrainReport> {
        let model = train_baseline(train, val, config)?;
        model.save(model_out)?;
        let report = model.report();
        self.loaded.insert(model_out.to_path_buf(), model);
        Ok(report)
    }

    fn predict(&mut self, model_path: &Path, samples: &[TextItem]) -> Result<Vec<PredictionRecord>> {
        if !self.loaded.contains_key(model_path) {
            let model = BaselineModel::load(model_path)?;
            self.loaded.insert(model_path.to_path_buf(), model);
        }
        Ok(self.loaded[model_path].predict(samples))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn version_is_mandatory() {
        let no_v = r#"{"op":"predict","model_path":"m","samples":[]}"#;
        assert!(parse_request(no_v).unwrap_err().to_string().contains("\"v\""));
        let v2 = r#"{"op":"predict","v":2,"model_path":"m","samples":[]}"#;
        assert!(parse_request(v2).is_err());
        assert!(parse_response(r#"{"ok":true}"#).is_err());
    }

    #[test]
    fn unknown_fields_ignored() {
        let line = r#"{"op":"predict","v":1,"trace":"x","model_path":"m","samples":[{"pair_id":"a","masked":"XXX","extra":3}]}"#;
        let req = parse_request(line).unwrap();
        assert_eq!(
            req,
            Request::Predict {
                v: 1,
                model_path: "m".into(),
                samples: vec![TextItem {
                    pair_id: "a".into(),
                    masked: "XXX".into()
                }],
            }
        );
        let resp = parse_response(r#"{"v":1,"ok":true,"device":"cpu","epochs_run":2,"best_val_loss":0.5}"#).unwrap();
        assert_eq!(resp.epochs_run, Some(2));
    }

    #[test]
    fn message_shapes() {
        let line = to_line(&Response::trained(TrainReport {
            epochs_run: 3,
            best_val_loss: 0.25,
        }));
        assert_eq!(line, "{\"v\":1,\"ok\":true,\"epochs_run\":3,\"best_val_loss\":0.25}\n");
        let line = to_line(&Response::failure("boom"));
        assert_eq!(line, "{\"v\":1,\"ok\":false,\"error\":\"boom\"}\n");
        let req = Request::Train {
            v: 1,
            train_path: "t".into(),
            val_path: "v".into(),
            config: TrainingConfig::adapter(),
            model_out: "m".into(),
        };
        let line = to_line(&req);
        assert!(line.starts_with("{\"op\":\"train\",\"v\":1,"));
        assert_eq!(parse_request(&line).unwrap(), req);
    }

    #[test]
    fn serve_session_over_buffers() {
        let dir = tempfile::tempdir().unwrap();
        let train: Vec<TextSample> = (0..20)
            .map(|i| TextSample {
                pair_id: format!("p{i}"),
                masked: if i % 2 == 0 { "XXX contains YYY" } else { "XXX near YYY" }.into(),
                label: u8::from(i % 2 == 0),
            })
            .collect();
        let tp = dir.path().join("train.jsonl");
        write_samples(&tp, &train).unwrap();
        let model = dir.path().join("model.json");
        let mut input = to_line(&Request::Train {
            v: 1,
            train_path: tp.clone(),
            val_path: tp.clone(),
            config: TrainingConfig::baseline(),
            model_out: model.clone(),
        });
        input.push_str("not json\n\n");
        input.push_str(&to_line(&Request::Predict {
            v: 1,
            model_path: model.clone(),
            samples: vec![
                TextItem {
                    pair_id: "b".into(),
                    masked: "XXX near YYY".into(),
                },
                TextItem {
                    pair_id: "a".into(),
                    masked: "XXX contains YYY".into(),
                },
                TextItem {
                    pair_id: "b".into(),
                    masked: "XXX near YYY".into(),
                },
            ],
        }));
        let mut out = Vec::new();
        serve(input.as_bytes(), &mut out, &mut BaselineBackend::default()).unwrap();
        let lines: Vec<Response> = String::from_utf8(out)
            .unwrap()
            .lines()
            .map(|l| parse_response(l).unwrap())
            .collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].ok && lines[0].epochs_run.unwrap() >= 1);
        assert!(!lines[1].ok);
        let preds = lines[2].predictions.as_ref().unwrap();
        let ids: Vec<&str> = preds.iter().map(|p| p.pair_id.as_str()).collect();
        assert_eq!(ids, ["b", "a", "b"]);
        assert_eq!(preds.iter().map(|p| p.label).collect::<Vec<_>>(), [0, 1, 0]);
    }

    #[test]
    fn train_failure_is_reported_not_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let req = Request::Train {
            v: 1,
            train_path: dir.path().join("missing.jsonl"),
            val_path: dir.path().join("missing.jsonl"),
            config: TrainingConfig::baseline(),
            model_out: dir.path().join("m.json"),
        };
        let resp = handle(&mut BaselineBackend::default(), &req);
        assert!(!resp.ok);
        assert!(resp.error.unwrap().contains("missing.jsonl"));
    }
}
