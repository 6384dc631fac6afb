//! Blocking HTTPS transport for the gateway.

use std::time::Duration;

use serde_json::Value;
use shortage_core::gateway::{
    build_http_call, parse_http_response, ChatRequest, ChatResponse, GatewayError, ProviderConfig, Transport,
    TransportFailure,
};

pub struct HttpTransport {
    config: ProviderConfig,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    /// Reads the API key from the environment variable named in the config.
    pub fn from_env(config: &ProviderConfig) -> Result<Self, GatewayError> {
        let api_key = config.api_key().ok_or_else(|| GatewayError::MissingApiKey(config.api_key_env.clone()))?;
        Self::with_key(config, api_key)
    }

    pub fn with_key(config: &ProviderConfig, api_key: String) -> Result<Self, GatewayError> {
        config.validate().map_err(GatewayError::InvalidRequest)?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs.max(0.001)))
            .build()
            .map_err(|e| GatewayError::InvalidRequest(format!("http client: {e}")))?;
        Ok(Self { config: config.clone(), api_key, client })
    }
}

impl Transport for HttpTransport {
    fn send(&self, req: &ChatRequest) -> Result<ChatResponse, TransportFailure> {
        let call = build_http_call(&self.config, &self.api_key, req);
        let mut builder = self.client.post(&call.url).json(&call.body);
        for (k, v) in &call.headers {
            builder = builder.header(k, v);
        }
        let resp = builder.send().map_err(|e| TransportFailure::Network(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| TransportFailure::Network(e.to_string()))?;
        if !status.is_success() {
            return Err(TransportFailure::Status { code: status.as_u16(), body: text });
        }
        let body: Value = serde_json::from_str(&text)
            .map_err(|e| TransportFailure::Network(format!("provider returned non-JSON body: {e}")))?;
        // A well-formed response without the expected fields is treated like a bad gateway.
        parse_http_response(self.config.kind, &body).map_err(|m| TransportFailure::Status { code: 502, body: m })
    }
}
