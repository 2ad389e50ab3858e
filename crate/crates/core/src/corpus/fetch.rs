//! Entrez E-utilities client with an on-disk payload cache.
//!
//! Cache layout, one directory per `(query, max_results)`:
//!
//! ```text
//! <cache_dir>/<key>/meta.json          query, max_results, retrieved_at
//! <cache_dir>/<key>/search-0000.json   esearch pages
//! <cache_dir>/<key>/fetch-0000.xml     efetch pages, `batch_size` ids each
//! ```
//!
//! Every payload is written to the cache before it is parsed, and a warm
//! cache is replayed without touching the network.

use std::cell::Cell;
use std::path::PathBuf;
use std::thread;
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{parse_pubmed_payload, write_atomic, Corpus};
use crate::error::{Error, Result};

pub const API_KEY_ENV: &str = "RELEX_ENTREZ_API_KEY";
const EUTILS_BASE: &str = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils";
/// esearch refuses larger pages.
const SEARCH_PAGE: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

/// Minimal GET transport; `Err` means the request never produced a response.
pub trait Transport {
    fn get(&self, url: &str, query: &[(&str, String)]) -> std::result::Result<HttpResponse, String>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        UreqTransport { agent }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(60))
    }
}

impl Transport for UreqTransport {
    fn get(&self, url: &str, query: &[(&str, String)]) -> std::result::Result<HttpResponse, String> {
        let mut req = self.agent.get(url);
        for (k, v) in query {
            req = req.query(*k, v);
        }
        let mut resp = req.call().map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .with_config()
            .limit(256 * 1024 * 1024)
            .read_to_vec()
            .map_err(|e| e.to_string())?;
        Ok(HttpResponse { status, body })
    }
}

/// Spaces out requests to at most `per_second`.
pub struct RateLimiter {
    min_interval: Duration,
    last: Cell<Option<Instant>>,
}

impl RateLimiter {
    pub fn new(per_second: u32) -> Self {
        RateLimiter {
            min_interval: Duration::from_secs(1) / per_second.max(1),
            last: Cell::new(None),
        }
    }

    /// NCBI policy: 3 requests/s without a key, 10 with one.
    pub fn for_api_key(api_key: Option<&str>) -> Self {
        Self::new(if api_key.is_some() { 10 } else { 3 })
    }

    pub fn min_interval(&self) -> Duration {
        self.min_interval
    }

    pub fn wait(&self) {
        if let Some(last) = self.last.get() {
            let elapsed = last.elapsed();
            if elapsed < self.min_interval {
                thread::sleep(self.min_interval - elapsed);
            }
        }
        self.last.set(Some(Instant::now()));
    }
}

#[derive(Debug, Clone)]
pub struct FetchOptions {
    pub cache_dir: PathBuf,
    pub api_key: Option<String>,
    /// Ids per efetch call.
    pub batch_size: usize,
    /// Attempts per request, including the first.
    pub max_attempts: u32,
    pub backoff: Duration,
    /// Fail on cache miss instead of going to the network.
    pub offline: bool,
    pub base_url: String,
}

impl FetchOptions {
    pub fn new(cache_dir: impl Into<PathBuf>) -> Self {
        FetchOptions {
            cache_dir: cache_dir.into(),
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            batch_size: 200,
            max_attempts: 5,
            backoff: Duration::from_millis(500),
            offline: false,
            base_url: EUTILS_BASE.to_string(),
        }
    }

    /// Directory holding the cached payloads for one query.
    pub fn query_dir(&self, query: &str, max_results: usize) -> PathBuf {
        self.cache_dir.join(cache_key(query, max_results))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheMeta {
    query: String,
    max_results: usize,
    retrieved_at: DateTime<Utc>,
}

#[derive(Deserialize)]
struct SearchEnvelope {
    esearchresult: SearchResult,
}

#[derive(Deserialize)]
struct SearchResult {
    #[serde(default)]
    count: String,
    #[serde(default)]
    idlist: Vec<String>,
}

/// Cache directory name for a `(query, max_results)` pair.
pub fn cache_key(query: &str, max_results: usize) -> String {
    let mut hasher = Sha256::new();
    hasher.update(query.as_bytes());
    hasher.update([0u8]);
    hasher.update(max_results.to_string().as_bytes());
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

struct Session<'a, T: Transport> {
    transport: &'a T,
    opts: &'a FetchOptions,
    limiter: RateLimiter,
    dir: PathBuf,
}

impl<T: Transport> Session<'_, T> {
    /// Returns the cached payload for `name`, fetching and caching it first
    /// on a miss.
    fn cached(&self, name: &str, url: &str, query: &[(&str, String)]) -> Result<Vec<u8>> {
        let path = self.dir.join(name);
        if path.exists() {
            return std::fs::read(&path).map_err(|e| Error::io(&path, e));
        }
        if self.opts.offline {
            return Err(Error::Validation(format!(
                "cache miss for {} in offline mode",
                path.display()
            )));
        }
        let body = self.request(url, query)?;
        write_atomic(&path, &body)?;
        Ok(body)
    }

    fn request(&self, url: &str, query: &[(&str, String)]) -> Result<Vec<u8>> {
        let mut params = query.to_vec();
        params.push(("tool", "relex".to_string()));
        if let Some(key) = &self.opts.api_key {
            params.push(("api_key", key.clone()));
        }
        let attempts = self.opts.max_attempts.max(1);
        let mut last_error = String::new();
        let mut throttled = false;
        for attempt in 1..=attempts {
            self.limiter.wait();
            match self.transport.get(url, &params) {
                Ok(resp) if (200..300).contains(&resp.status) => return Ok(resp.body),
                Ok(resp) if resp.status == 429 => {
                    throttled = true;
                    log::warn!("HTTP 429 from {url} (attempt {attempt}/{attempts})");
                }
                Ok(resp) if resp.status >= 500 => {
                    throttled = false;
                    last_error = format!("HTTP {}", resp.status);
                }
                Ok(resp) => {
                    return Err(Error::Network {
                        attempts: attempt,
                        message: format!("HTTP {} from {url}", resp.status),
                    })
                }
                Err(e) => {
                    throttled = false;
                    last_error = e;
                }
            }
            if attempt < attempts {
                thread::sleep(self.opts.backoff * 2u32.pow(attempt - 1));
            }
        }
        if throttled {
            Err(Error::RateLimited { attempts })
        } else {
            Err(Error::Network {
                attempts,
                message: last_error,
            })
        }
    }
}

/// Search PubMed for `query` and return at most `max_results` parsed
/// abstracts.
pub fn fetch_abstracts<T: Transport>(
    query: &str,
    max_results: usize,
    opts: &FetchOptions,
    transport: &T,
) -> Result<Corpus> {
    if max_results == 0 {
        return Err(Error::Validation("max_results must be at least 1".into()));
    }
    if opts.batch_size == 0 {
        return Err(Error::Validation("batch_size must be at least 1".into()));
    }
    let dir = opts.query_dir(query, max_results);
    let session = Session {
        transport,
        opts,
        limiter: RateLimiter::for_api_key(opts.api_key.as_deref()),
        dir: dir.clone(),
    };

    let meta_path = dir.join("meta.json");
    let meta: CacheMeta = if meta_path.exists() {
        let raw = std::fs::read(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        serde_json::from_slice(&raw).map_err(|e| Error::format(&meta_path, 1, e))?
    } else {
        if opts.offline {
            return Err(Error::Validation(format!(
                "cache miss for {} in offline mode",
                meta_path.display()
            )));
        }
        let meta = CacheMeta {
            query: query.to_string(),
            max_results,
            retrieved_at: Utc::now(),
        };
        write_atomic(&meta_path, &serde_json::to_vec(&meta).expect("meta serializes"))?;
        meta
    };

    let mut ids: Vec<String> = Vec::new();
    let mut page = 0;
    loop {
        let retmax = SEARCH_PAGE.min(max_results - ids.len());
        let name = format!("search-{page:04}.json");
        let body = session.cached(
            &name,
            &format!("{}/esearch.fcgi", opts.base_url),
            &[
                ("db", "pubmed".into()),
                ("term", query.into()),
                ("retmode", "json".into()),
                ("retstart", ids.len().to_string()),
                ("retmax", retmax.to_string()),
            ],
        )?;
        let envelope: SearchEnvelope = serde_json::from_slice(&body).map_err(|e| Error::Payload {
            offset: 0,
            message: format!("{name}: {e}"),
        })?;
        let total: usize = envelope.esearchresult.count.parse().unwrap_or(0);
        let got = envelope.esearchresult.idlist.len();
        ids.extend(envelope.esearchresult.idlist);
        page += 1;
        if got == 0 || ids.len() >= max_results.min(total) {
            break;
        }
    }
    ids.truncate(max_results);

    let mut documents = Vec::with_capacity(ids.len());
    for (page, batch) in ids.chunks(opts.batch_size).enumerate() {
        let body = session.cached(
            &format!("fetch-{page:04}.xml"),
            &format!("{}/efetch.fcgi", opts.base_url),
            &[
                ("db", "pubmed".into()),
                ("retmode", "xml".into()),
                ("id", batch.join(",")),
            ],
        )?;
        documents.extend(parse_pubmed_payload(&body)?);
    }

    // The same PMID can come back twice when the result set shifts between
    // search pages.
    let mut seen = std::collections::HashSet::new();
    documents.retain(|d| seen.insert(d.doc_id.clone()));
    Corpus::new(documents, meta.query, meta.retrieved_at)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::RefCell;
    use std::collections::VecDeque;
    use std::path::Path;

    const FIXTURE: &str = include_str!("../../tests/fixtures/pubmed_3.xml");

    /// Serves queued responses and records every call.
    struct ScriptedTransport {
        responses: RefCell<VecDeque<std::result::Result<HttpResponse, String>>>,
        calls: RefCell<Vec<String>>,
    }

    impl ScriptedTransport {
        fn new(responses: Vec<std::result::Result<HttpResponse, String>>) -> Self {
            ScriptedTransport {
                responses: RefCell::new(responses.into()),
                calls: RefCell::new(Vec::new()),
            }
        }
    }

    impl Transport for ScriptedTransport {
        fn get(&self, url: &str, _: &[(&str, String)]) -> std::result::Result<HttpResponse, String> {
            self.calls.borrow_mut().push(url.to_string());
            self.responses
                .borrow_mut()
                .pop_front()
                .unwrap_or_else(|| Err("no scripted response".into()))
        }
    }

    fn ok(body: &str) -> std::result::Result<HttpResponse, String> {
        Ok(HttpResponse {
            status: 200,
            body: body.as_bytes().to_vec(),
        })
    }

    fn status(code: u16) -> std::result::Result<HttpResponse, String> {
        Ok(HttpResponse {
            status: code,
            body: Vec::new(),
        })
    }

    fn opts(dir: &Path) -> FetchOptions {
        FetchOptions {
            backoff: Duration::from_millis(1),
            api_key: Some("test".into()),
            ..FetchOptions::new(dir)
        }
    }

    const SEARCH: &str = r#"{"esearchresult":{"count":"3","idlist":["31234567","2817","30111222"]}}"#;

    #[test]
    fn warm_cache_skips_network() {
        let dir = tempfile::tempdir().unwrap();
        let cold = ScriptedTransport::new(vec![ok(SEARCH), ok(FIXTURE)]);
        let first = fetch_abstracts("food chemical", 10, &opts(dir.path()), &cold).unwrap();
        assert_eq!(cold.calls.borrow().len(), 2);
        assert_eq!(first.len(), 3);
        assert!(first.documents().iter().all(|d| !d.title.is_empty()));

        let cache = opts(dir.path()).query_dir("food chemical", 10);
        let snapshot: Vec<_> = ["search-0000.json", "fetch-0000.xml"]
            .iter()
            .map(|f| std::fs::read(cache.join(f)).unwrap())
            .collect();

        let warm = ScriptedTransport::new(vec![]);
        let second = fetch_abstracts("food chemical", 10, &opts(dir.path()), &warm).unwrap();
        assert!(warm.calls.borrow().is_empty());
        assert_eq!(first, second);
        let again: Vec<_> = ["search-0000.json", "fetch-0000.xml"]
            .iter()
            .map(|f| std::fs::read(cache.join(f)).unwrap())
            .collect();
        assert_eq!(snapshot, again);
    }

    #[test]
    fn zero_hits_give_empty_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let t = ScriptedTransport::new(vec![ok(r#"{"esearchresult":{"count":"0","idlist":[]}}"#)]);
        let corpus = fetch_abstracts("nothing", 5, &opts(dir.path()), &t).unwrap();
        assert!(corpus.is_empty());
        assert_eq!(corpus.query, "nothing");
    }

    #[test]
    fn batches_efetch_calls() {
        let dir = tempfile::tempdir().unwrap();
        let mut o = opts(dir.path());
        o.batch_size = 2;
        let one = |id: &str| {
            format!(
                "<PubmedArticleSet><PubmedArticle><MedlineCitation><PMID>{id}</PMID><Article>\
                 <ArticleTitle>t{id}</ArticleTitle></Article></MedlineCitation></PubmedArticle></PubmedArticleSet>"
            )
        };
        let two = "<PubmedArticleSet>\
            <PubmedArticle><MedlineCitation><PMID>1</PMID><Article><ArticleTitle>a</ArticleTitle></Article></MedlineCitation></PubmedArticle>\
            <PubmedArticle><MedlineCitation><PMID>2</PMID><Article><ArticleTitle>b</ArticleTitle></Article></MedlineCitation></PubmedArticle>\
            </PubmedArticleSet>";
        let t = ScriptedTransport::new(vec![
            ok(r#"{"esearchresult":{"count":"50","idlist":["1","2","3"]}}"#),
            ok(two),
            ok(&one("3")),
        ]);
        let corpus = fetch_abstracts("q", 3, &o, &t).unwrap();
        assert_eq!(corpus.len(), 3);
        let calls = t.calls.borrow();
        assert_eq!(calls.len(), 3);
        assert!(calls[1].ends_with("efetch.fcgi"));
    }

    #[test]
    fn retries_after_429() {
        let dir = tempfile::tempdir().unwrap();
        let t = ScriptedTransport::new(vec![status(429), ok(SEARCH), status(429), ok(FIXTURE)]);
        let corpus = fetch_abstracts("q", 3, &opts(dir.path()), &t).unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(t.calls.borrow().len(), 4);
    }

    #[test]
    fn persistent_429_is_rate_limit_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut o = opts(dir.path());
        o.max_attempts = 3;
        let t = ScriptedTransport::new(vec![status(429), status(429), status(429)]);
        match fetch_abstracts("q", 3, &o, &t) {
            Err(Error::RateLimited { attempts }) => assert_eq!(attempts, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn network_failure_reports_attempts() {
        let dir = tempfile::tempdir().unwrap();
        let mut o = opts(dir.path());
        o.max_attempts = 4;
        let t = ScriptedTransport::new(vec![]);
        match fetch_abstracts("q", 3, &o, &t) {
            Err(e @ Error::Network { attempts: 4, .. }) => assert_eq!(e.exit_code(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_page_is_cached_then_reported() {
        let dir = tempfile::tempdir().unwrap();
        let t = ScriptedTransport::new(vec![ok(SEARCH), ok("<PubmedArticleSet><oops")]);
        assert!(matches!(
            fetch_abstracts("q", 3, &opts(dir.path()), &t),
            Err(Error::Payload { .. })
        ));
        let cache = opts(dir.path()).query_dir("q", 3);
        assert!(cache.join("fetch-0000.xml").exists());
    }

    #[test]
    fn offline_miss_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut o = opts(dir.path());
        o.offline = true;
        let t = ScriptedTransport::new(vec![]);
        assert!(fetch_abstracts("q", 3, &o, &t).is_err());
        assert!(t.calls.borrow().is_empty());
    }

    #[test]
    fn rate_limits_follow_ncbi_policy() {
        assert_eq!(
            RateLimiter::for_api_key(None).min_interval(),
            Duration::from_secs(1) / 3
        );
        assert_eq!(
            RateLimiter::for_api_key(Some("k")).min_interval(),
            Duration::from_millis(100)
        );
    }
}
