//! Talk to real HTTP services. Needs live endpoints, so every section is
//! gated on an environment variable and the example exits politely when
//! none are set:
//!
//! ```text
//! HARNESS_DEMO_URL=http://localhost:8000/v1/chat/completions \
//! HARNESS_DEMO_MODEL=my-model \
//! HARNESS_DEMO_TOKEN=sk-...          # optional bearer token
//! cargo run --example http_backends
//! ```
//!
//! Optionally also `HARNESS_DEMO_EMBED_URL` (an embeddings endpoint) and
//! `HARNESS_DEMO_NLI_URL` (a premise/hypothesis scorer). Wire formats:
//!
//! * chat: OpenAI-style `{"model", "messages": [{"role": "user", ...}]}`
//!   in, `choices[0].message.content` out; retried with exponential
//!   backoff on 429 and 5xx.
//! * embedding: `{"input": text}` (plus `"model"` when configured) in,
//!   `data[0].embedding` out.
//! * NLI: `{"premise", "hypothesis"}` in,
//!   `{"entailment", "neutral", "contradiction"}` out.

use std::env;
use std::time::Duration;

use mirage::backends::http::{HttpChat, HttpEmbedding, HttpNli, HttpOptions};
use mirage::backends::{ChatBackend, EmbeddingBackend, NliBackend};
use mirage::detectors::similarity::cosine;

fn options() -> HttpOptions {
    HttpOptions {
        timeout: Duration::from_secs(30),
        retry_base: Duration::from_millis(250),
        max_retries: 2,
        concurrency: 1,
    }
}

#[tokio::main(flavor = "current_thread")]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let token = env::var("HARNESS_DEMO_TOKEN").ok();
    let mut ran_anything = false;

    if let Ok(url) = env::var("HARNESS_DEMO_URL") {
        ran_anything = true;
        let model = env::var("HARNESS_DEMO_MODEL").unwrap_or_else(|_| "default".into());
        let chat = HttpChat::new(&url, model, token.clone(), options())?;
        println!("chat ({}):", chat.model_name());
        let reply = chat
            .complete("Reply with one short sentence: what do you do?", 0)
            .await?;
        println!("  {reply}\n");
    }

    if let Ok(url) = env::var("HARNESS_DEMO_EMBED_URL") {
        ran_anything = true;
        let model = env::var("HARNESS_DEMO_EMBED_MODEL").ok();
        let backend = HttpEmbedding::new(&url, model, token.clone(), options())?;
        let a = backend.embed("The cat sleeps.").await?;
        let b = backend.embed("The cat is sleeping.").await?;
        println!(
            "embedding: {} dimensions, cosine = {:.4}\n",
            a.len(),
            cosine(&a, &b)?
        );
    }

    if let Ok(url) = env::var("HARNESS_DEMO_NLI_URL") {
        ran_anything = true;
        let backend = HttpNli::new(&url, token, options())?;
        let triple = backend
            .infer("It rained all night.", "The streets were wet.")
            .await?;
        println!(
            "nli: entail {:.3}, neutral {:.3}, contradict {:.3} (renormalized: {})\n",
            triple.entail(),
            triple.neutral(),
            triple.contradict(),
            triple.renormalized(),
        );
    }

    if !ran_anything {
        println!("no endpoints configured — set at least one of:");
        println!("  HARNESS_DEMO_URL        chat completions endpoint");
        println!("  HARNESS_DEMO_EMBED_URL  embeddings endpoint");
        println!("  HARNESS_DEMO_NLI_URL    premise/hypothesis NLI endpoint");
        println!("optional: HARNESS_DEMO_MODEL, HARNESS_DEMO_EMBED_MODEL, HARNESS_DEMO_TOKEN");
        println!("\nthe offline examples (see `cargo run --example`) need no services.");
    }
    Ok(())
}
