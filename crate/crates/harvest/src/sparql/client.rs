use std::sync::Arc;
use std::time::Duration;

use reqwest::header::{ACCEPT, RETRY_AFTER, USER_AGENT};
use reqwest::{RequestBuilder, StatusCode};
use serde::{Deserialize, Serialize};

use super::parse::{parse_select_results, Bindings};
use super::{ClientError, EndpointConfig, ErrorClass, RateLimiter, RetryPolicy};

/// One page of SELECT results.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectPage {
    pub rows: Vec<Bindings>,
    pub offset: u64,
    pub is_last: bool,
}

/// A configured endpoint: HTTP client, retry policy and its own limiter.
/// Cheap to clone; clones share the limiter.
#[derive(Debug, Clone)]
pub struct Endpoint {
    inner: Arc<Inner>,
}

#[derive(Debug)]
struct Inner {
    config: EndpointConfig,
    retry: RetryPolicy,
    http: reqwest::Client,
    limiter: RateLimiter,
}

enum Failure {
    Transient(ErrorClass, String, Option<Duration>),
    Fatal(ClientError),
}

impl Endpoint {
    pub fn new(config: EndpointConfig, retry: RetryPolicy) -> Result<Self, ClientError> {
        config.validate()?;
        retry.validate()?;
        let http = reqwest::Client::builder()
            .timeout(config.timeout())
            .build()
            .map_err(|e| ClientError::InvalidConfig(e.to_string()))?;
        let limiter = RateLimiter::new(config.min_interval(), config.max_in_flight);
        Ok(Endpoint {
            inner: Arc::new(Inner {
                config,
                retry,
                http,
                limiter,
            }),
        })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.inner.config
    }

    pub fn retry_policy(&self) -> &RetryPolicy {
        &self.inner.retry
    }

    /// Runs one SELECT. `is_last` is judged against the endpoint's row limit;
    /// the pager re-judges it against the requested page size.
    pub async fn execute_select(&self, query: &str) -> Result<SelectPage, ClientError> {
        let rows = self.select_rows(query).await?;
        let is_last = rows.len() < self.inner.config.row_limit as usize;
        Ok(SelectPage {
            rows,
            offset: 0,
            is_last,
        })
    }

    pub(crate) async fn select_rows(&self, query: &str) -> Result<Vec<Bindings>, ClientError> {
        tracing::trace!(endpoint = %self.inner.config.base_url, %query, "select");
        let body = self
            .send_with_retry(|http| {
                http.post(self.inner.config.base_url.clone())
                    .form(&[("query", query)])
            })
            .await?;
        parse_select_results(&body)
    }

    /// GET against the base URL with the given query parameters.
    pub(crate) async fn get(&self, params: &[(&str, &str)]) -> Result<Vec<u8>, ClientError> {
        self.send_with_retry(|http| http.get(self.inner.config.base_url.clone()).query(params))
            .await
    }

    async fn send_with_retry<F>(&self, build: F) -> Result<Vec<u8>, ClientError>
    where
        F: Fn(&reqwest::Client) -> RequestBuilder,
    {
        let policy = &self.inner.retry;
        let mut attempt = 0;
        loop {
            attempt += 1;
            let outcome = {
                let _permit = self.inner.limiter.admit().await;
                self.attempt(build(&self.inner.http)).await
            };
            let (class, message, retry_after) = match outcome {
                Ok(body) => return Ok(body),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Transient(class, message, retry_after)) => {
                    (class, message, retry_after)
                }
            };
            if !policy.is_retryable(class) || attempt >= policy.max_attempts {
                return Err(ClientError::RetriesExhausted {
                    attempts: attempt,
                    last_class: class,
                    last_message: message,
                });
            }
            let mut wait = policy.backoff(attempt, &mut rand::rng());
            if let Some(ra) = retry_after {
                wait = wait.max(ra);
            }
            tracing::warn!(
                endpoint = %self.inner.config.base_url,
                attempt,
                %class,
                wait_ms = wait.as_millis() as u64,
                "request failed, backing off: {message}"
            );
            tokio::time::sleep(wait).await;
        }
    }

    async fn attempt(&self, req: RequestBuilder) -> Result<Vec<u8>, Failure> {
        let t = &self.inner.config.transport;
        let resp = req
            .header(USER_AGENT, &t.user_agent)
            .header(ACCEPT, &t.accept)
            .send()
            .await
            .map_err(transport_failure)?;
        let status = resp.status();
        let retry_after = resp
            .headers()
            .get(RETRY_AFTER)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let body = resp.bytes().await.map_err(transport_failure)?;
        if status.is_success() {
            return Ok(body.to_vec());
        }
        let text = String::from_utf8_lossy(&body[..body.len().min(512)]).into_owned();
        Err(classify_status(status, text, retry_after))
    }
}

fn transport_failure(e: reqwest::Error) -> Failure {
    let class = if e.is_timeout() {
        ErrorClass::Timeout
    } else {
        ErrorClass::Network
    };
    Failure::Transient(class, e.to_string(), None)
}

fn classify_status(status: StatusCode, body: String, retry_after: Option<Duration>) -> Failure {
    let message = format!("HTTP {}: {}", status.as_u16(), body.trim());
    match status.as_u16() {
        429 => Failure::Transient(ErrorClass::RateLimited, message, retry_after),
        408 | 504 => Failure::Transient(ErrorClass::Timeout, message, None),
        500..=599 if body.to_ascii_lowercase().contains("timeout") => {
            Failure::Transient(ErrorClass::Timeout, message, None)
        }
        500..=599 => Failure::Transient(ErrorClass::ServerError, message, retry_after),
        code => Failure::Fatal(ClientError::NonRetryableQuery {
            status: code,
            message: body.trim().to_owned(),
        }),
    }
}
