//! Remote chat-completion backend. POSTs the rendered bundle as a messages
//! array (with optional base64 image parts) and retries transient failures
//! with exponential backoff. The credential comes from an env var and is
//! checked before any network traffic.

use serde_json::{json, Value};

use super::backend::{BackendKind, GatewayError, RequestCtx, VlmBackend};
use super::prompt::PromptBundle;

pub struct RemoteBackend {
    client: reqwest::blocking::Client,
    endpoint: String,
    model: String,
    credential_env: String,
    timeout_secs: u64,
    retries: u32,
    backoff_ms: u64,
}

impl RemoteBackend {
    pub fn new(
        endpoint: String,
        model: String,
        credential_env: String,
        timeout_secs: u64,
        retries: u32,
        backoff_ms: u64,
    ) -> RemoteBackend {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(timeout_secs))
            .build()
            .expect("reqwest client builds");
        RemoteBackend {
            client,
            endpoint,
            model,
            credential_env,
            timeout_secs,
            retries,
            backoff_ms,
        }
    }

    fn request_body(&self, bundle: &PromptBundle) -> Value {
        let mut content = vec![json!({"type": "text", "text": bundle.render()})];
        for (name, base64) in &bundle.attachments {
            content.push(json!({"type": "image", "name": name, "base64": base64}));
        }
        json!({
            "model": self.model,
            "messages": [{"role": "user", "content": content}],
            "temperature": 0.0,
        })
    }

    fn extract_text(value: &Value) -> Result<String, GatewayError> {
        let content = value
            .pointer("/choices/0/message/content")
            .ok_or_else(|| GatewayError::RemoteMalformed {
                message: "no choices[0].message.content".to_string(),
            })?;
        match content {
            Value::String(s) => Ok(s.clone()),
            Value::Array(parts) => {
                let text: String = parts
                    .iter()
                    .filter_map(|p| p.get("text").and_then(|t| t.as_str()))
                    .collect::<Vec<_>>()
                    .join("");
                if text.is_empty() {
                    Err(GatewayError::RemoteMalformed {
                        message: "content parts carry no text".to_string(),
                    })
                } else {
                    Ok(text)
                }
            }
            other => Err(GatewayError::RemoteMalformed {
                message: format!("unexpected content shape: {other}"),
            }),
        }
    }
}

impl VlmBackend for RemoteBackend {
    fn complete(
        &self,
        bundle: &PromptBundle,
        _ctx: &mut RequestCtx<'_>,
    ) -> Result<String, GatewayError> {
        let credential = std::env::var(&self.credential_env).map_err(|_| {
            GatewayError::CredentialMissing {
                var: self.credential_env.clone(),
            }
        })?;
        let body = self.request_body(bundle);

        let mut last_err = GatewayError::RemoteTimeout {
            seconds: self.timeout_secs,
        };
        for attempt in 0..=self.retries {
            if attempt > 0 {
                std::thread::sleep(std::time::Duration::from_millis(
                    self.backoff_ms.saturating_mul(1 << (attempt - 1).min(8)),
                ));
            }
            let sent = self
                .client
                .post(&self.endpoint)
                .bearer_auth(&credential)
                .json(&body)
                .send();
            match sent {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        let value: Value =
                            resp.json().map_err(|e| GatewayError::RemoteMalformed {
                                message: e.to_string(),
                            })?;
                        return Self::extract_text(&value);
                    }
                    last_err = GatewayError::RemoteHttp {
                        status: status.as_u16(),
                    };
                    // Client errors are final; server errors and 429 retry.
                    if !(status.is_server_error() || status.as_u16() == 429) {
                        return Err(last_err);
                    }
                }
                Err(e) if e.is_timeout() => {
                    last_err = GatewayError::RemoteTimeout {
                        seconds: self.timeout_secs,
                    };
                }
                Err(e) => {
                    last_err = GatewayError::Transport {
                        message: e.to_string(),
                    };
                }
            }
        }
        Err(last_err)
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Remote
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::fault_profile::{FaultStream, VlmFaultProfile};
    use crate::gateway::prompt::{build_decision_prompt, ExemplarSet};
    use crate::testutil;
    use crate::world::snapshot;
    use std::io::{Read, Write};
    use std::net::TcpListener;

    fn bundle() -> PromptBundle {
        let snap = snapshot(&testutil::task(1).world);
        build_decision_prompt("I'm hungry", &snap, &[], ExemplarSet::builtin())
    }

    fn ctx_parts() -> FaultStream {
        FaultStream::new(VlmFaultProfile::default(), 0)
    }

    #[test]
    fn missing_credential_fails_before_any_network_call() {
        let backend = RemoteBackend::new(
            // Unroutable on purpose: the call must fail before reaching it.
            "http://192.0.2.1:1/v1/chat".to_string(),
            "test-model".to_string(),
            "REPLANVLM_TEST_UNSET_VAR".to_string(),
            1,
            0,
            1,
        );
        std::env::remove_var("REPLANVLM_TEST_UNSET_VAR");
        let mut faults = ctx_parts();
        let mut ctx = RequestCtx {
            faults: &mut faults,
            goal: None,
        };
        let started = std::time::Instant::now();
        let err = backend.complete(&bundle(), &mut ctx).unwrap_err();
        assert!(matches!(err, GatewayError::CredentialMissing { .. }));
        assert!(started.elapsed().as_millis() < 500);
    }

    fn spawn_server(responses: Vec<(u16, String)>) -> std::net::SocketAddr {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut buf = [0u8; 65536];
                // One read is enough for these small test requests.
                let _ = stream.read(&mut buf);
                let reply = format!(
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(reply.as_bytes()).unwrap();
            }
        });
        addr
    }

    #[test]
    fn retries_then_succeeds_on_transient_server_error() {
        let ok_body = serde_json::json!({
            "choices": [{"message": {"content": "PLAN:\n1. x\nCODE:\n```\nwait(1)\n```"}}]
        })
        .to_string();
        let addr = spawn_server(vec![(503, "{}".to_string()), (200, ok_body)]);
        std::env::set_var("REPLANVLM_TEST_RETRY_KEY", "k");
        let backend = RemoteBackend::new(
            format!("http://{addr}/v1/chat"),
            "test-model".to_string(),
            "REPLANVLM_TEST_RETRY_KEY".to_string(),
            5,
            2,
            10,
        );
        let mut faults = ctx_parts();
        let mut ctx = RequestCtx {
            faults: &mut faults,
            goal: None,
        };
        let text = backend.complete(&bundle(), &mut ctx).unwrap();
        assert!(text.contains("PLAN:"));
    }

    #[test]
    fn client_error_is_final() {
        let addr = spawn_server(vec![(401, "{}".to_string())]);
        std::env::set_var("REPLANVLM_TEST_401_KEY", "k");
        let backend = RemoteBackend::new(
            format!("http://{addr}/v1/chat"),
            "test-model".to_string(),
            "REPLANVLM_TEST_401_KEY".to_string(),
            5,
            3,
            10,
        );
        let mut faults = ctx_parts();
        let mut ctx = RequestCtx {
            faults: &mut faults,
            goal: None,
        };
        let err = backend.complete(&bundle(), &mut ctx).unwrap_err();
        assert!(matches!(err, GatewayError::RemoteHttp { status: 401 }));
    }
}
