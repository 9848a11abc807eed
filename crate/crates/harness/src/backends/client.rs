use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::cache::ResponseCache;
use super::transport::Transport;
use super::wire::WireResponse;
use super::{BackendError, BackendErrorKind, EndpointDescriptor};

/// Counting semaphore capping concurrent requests to one endpoint.
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(n: usize) -> Self {
        Self { free: Mutex::new(n.max(1)), cv: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().expect("gate lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("gate lock");
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("gate lock") += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallStats {
    pub requests: u64,
    pub cache_hits: u64,
    pub network_attempts: u64,
}

/// Shareable handle to one endpoint.
pub struct BackendClient {
    descriptor: EndpointDescriptor,
    backend_id: String,
    transport: Box<dyn Transport>,
    cache: Arc<ResponseCache>,
    gate: Gate,
    requests: AtomicU64,
    hits: AtomicU64,
    attempts: AtomicU64,
}

impl BackendClient {
    pub fn new(descriptor: EndpointDescriptor, transport: Box<dyn Transport>, cache: Arc<ResponseCache>) -> Self {
        Self {
            backend_id: descriptor.backend_id(),
            gate: Gate::new(descriptor.in_flight),
            descriptor,
            transport,
            cache,
            requests: AtomicU64::new(0),
            hits: AtomicU64::new(0),
            attempts: AtomicU64::new(0),
        }
    }

    pub fn descriptor(&self) -> &EndpointDescriptor {
        &self.descriptor
    }

    pub fn backend_id(&self) -> &str {
        &self.backend_id
    }

    pub fn stats(&self) -> CallStats {
        CallStats {
            requests: self.requests.load(Ordering::Relaxed),
            cache_hits: self.hits.load(Ordering::Relaxed),
            network_attempts: self.attempts.load(Ordering::Relaxed),
        }
    }

    fn error(&self, attempts: u32, kind: BackendErrorKind) -> BackendError {
        BackendError { backend_id: self.backend_id.clone(), role: self.descriptor.role, attempts, kind }
    }

    /// Sends `request`, serving it from cache when possible.
    ///
    /// Timeouts, connection failures, 429 and 5xx are retried with
    /// exponential backoff; other statuses and schema errors are not.
    pub fn call<Req: Serialize, Resp: WireResponse>(&self, request: &Req) -> Result<Resp, BackendError> {
        self.requests.fetch_add(1, Ordering::Relaxed);
        // Value maps are sorted, so this is a canonical encoding.
        let value = serde_json::to_value(request).map_err(|e| self.error(0, BackendErrorKind::Malformed(e.to_string())))?;
        let body = serde_json::to_vec(&value).expect("json value serializes");
        let key = ResponseCache::key(&self.backend_id, &body);

        if let Some(bytes) = self.cache.get(&key) {
            if let Ok((resp, _)) = parse::<Resp>(&bytes) {
                self.hits.fetch_add(1, Ordering::Relaxed);
                return Ok(resp);
            }
        }

        let max_attempts = self.descriptor.retries + 1;
        let timeout = Duration::from_millis(self.descriptor.timeout_ms);
        let mut attempt = 0;
        let bytes = loop {
            attempt += 1;
            let outcome = {
                let _permit = self.gate.acquire();
                self.attempts.fetch_add(1, Ordering::Relaxed);
                self.transport.post(self.descriptor.role.route(), &body, timeout)
            };
            match outcome {
                Ok(bytes) => break bytes,
                Err(e) if e.is_retryable() && attempt < max_attempts => {
                    let backoff = self.descriptor.backoff_ms.saturating_mul(1 << (attempt - 1).min(10));
                    if backoff > 0 {
                        thread::sleep(Duration::from_millis(backoff));
                    }
                }
                Err(e) => return Err(self.error(attempt, e.into())),
            }
        };

        let (resp, value) = parse::<Resp>(&bytes).map_err(|kind| self.error(attempt, kind))?;
        // A failed cache write is not worth failing the call over.
        let _ = self.cache.put(&key, &self.backend_id, &value);
        Ok(resp)
    }
}

fn parse<Resp: WireResponse>(bytes: &[u8]) -> Result<(Resp, serde_json::Value), BackendErrorKind> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| BackendErrorKind::Malformed(e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| BackendErrorKind::Malformed("response is not an object".into()))?;
    if let Some(field) = Resp::REQUIRED.iter().find(|f| !obj.contains_key(**f)) {
        return Err(BackendErrorKind::Schema { field: field.to_string() });
    }
    let resp = Resp::deserialize(&value).map_err(|e| BackendErrorKind::Malformed(e.to_string()))?;
    Ok((resp, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::transport::TransportError;
    use crate::backends::wire::{ScoreItem, ScoreKind, ScoreRequest, ScoreResponse};
    use crate::backends::Role;

    struct Scripted {
        replies: Mutex<Vec<Result<Vec<u8>, TransportError>>>,
    }

    impl Transport for Scripted {
        fn post(&self, _: &str, _: &[u8], _: Duration) -> Result<Vec<u8>, TransportError> {
            self.replies.lock().unwrap().remove(0)
        }
    }

    fn client(replies: Vec<Result<Vec<u8>, TransportError>>) -> BackendClient {
        BackendClient::new(
            EndpointDescriptor::mock(Role::TextDetector),
            Box::new(Scripted { replies: Mutex::new(replies) }),
            Arc::new(ResponseCache::in_memory()),
        )
    }

    fn request() -> ScoreRequest {
        ScoreRequest { kind: ScoreKind::TextSynth, item: ScoreItem { text: Some("hi".into()), audio_ref: None } }
    }

    const OK: &[u8] = br#"{"score": 0.5, "model_id": "m", "backend_version": "1"}"#;

    #[test]
    fn retries_server_errors_then_succeeds() {
        let c = client(vec![
            Err(TransportError::Status { status: 503, body: String::new() }),
            Ok(OK.to_vec()),
        ]);
        let r: ScoreResponse = c.call(&request()).unwrap();
        assert_eq!(r.score, 0.5);
        assert_eq!(c.stats().network_attempts, 2);
    }

    #[test]
    fn client_errors_are_not_retried() {
        let c = client(vec![Err(TransportError::Status { status: 400, body: "bad".into() })]);
        let e = c.call::<_, ScoreResponse>(&request()).unwrap_err();
        assert_eq!(e.attempts, 1);
        assert!(matches!(e.kind, BackendErrorKind::Status { status: 400, .. }));
    }

    #[test]
    fn missing_field_is_named() {
        let c = client(vec![Ok(br#"{"score": 0.5, "model_id": "m"}"#.to_vec())]);
        let e = c.call::<_, ScoreResponse>(&request()).unwrap_err();
        assert_eq!(e.kind, BackendErrorKind::Schema { field: "backend_version".into() });
    }

    #[test]
    fn second_identical_call_is_cached() {
        let c = client(vec![Ok(OK.to_vec())]);
        c.call::<_, ScoreResponse>(&request()).unwrap();
        c.call::<_, ScoreResponse>(&request()).unwrap();
        assert_eq!(c.stats(), CallStats { requests: 2, cache_hits: 1, network_attempts: 1 });
    }
}
