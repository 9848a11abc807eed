use std::time::Duration;

/// Failure of a single request attempt.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransportError {
    #[error("timed out")]
    Timeout,
    #[error("status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("connection failed: {0}")]
    Connection(String),
}

impl TransportError {
    pub fn is_retryable(&self) -> bool {
        match self {
            Self::Timeout | Self::Connection(_) => true,
            Self::Status { status, .. } => *status >= 500 || *status == 429,
        }
    }
}

/// Moves one JSON request body to a route and returns the response body.
pub trait Transport: Send + Sync {
    fn post(&self, route: &str, body: &[u8], timeout: Duration) -> Result<Vec<u8>, TransportError>;
}

/// JSON over HTTP to `<base><route>`.
pub struct HttpTransport {
    base: String,
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(base: &str) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| TransportError::Connection(e.to_string()))?;
        Ok(Self { base: base.trim_end_matches('/').to_string(), client })
    }
}

impl Transport for HttpTransport {
    fn post(&self, route: &str, body: &[u8], timeout: Duration) -> Result<Vec<u8>, TransportError> {
        let response = self
            .client
            .post(format!("{}{route}", self.base))
            .timeout(timeout)
            .header("content-type", "application/json")
            .body(body.to_vec())
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    TransportError::Timeout
                } else {
                    TransportError::Connection(e.to_string())
                }
            })?;
        let status = response.status();
        let bytes = response.bytes().map_err(|e| TransportError::Connection(e.to_string()))?;
        if !status.is_success() {
            return Err(TransportError::Status {
                status: status.as_u16(),
                body: String::from_utf8_lossy(&bytes).into_owned(),
            });
        }
        Ok(bytes.to_vec())
    }
}
