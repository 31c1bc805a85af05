use std::io::{IsTerminal, Write};
use std::path::Path;

use serde_json::json;
use tokio::io::{AsyncBufReadExt, BufReader};

use super::{CliConfig, Command, OutputFormat, EXIT_FAILURE, EXIT_OK};
use crate::annotate::{
    annotate_batch, parse_categories, read_corpus, read_examples, write_results, BatchOptions, PromptTemplate,
    Strategy, DEFAULT_SYSTEM_PROMPT, DEFAULT_USER_FORMAT,
};
use crate::embed::{embed_texts, write_matrix};
use crate::error::{Error, Result};
use crate::format::TableFormat;
use crate::mockd::{Fault, MockConfig, MockServer};
use crate::session::ChatSession;
use crate::transport::{encode_image, ApiError, Client, ModelTag, StreamEvent};

pub(super) async fn dispatch(command: Command, cfg: &CliConfig) -> Result<u8> {
    if let Command::Mock {
        port,
        fault,
        chunk_size,
        no_models,
    } = command
    {
        return mock(port, fault, chunk_size, no_models).await;
    }
    let client = Client::new(cfg.server.clone())?;
    match command {
        Command::Ping => ping(&client, cfg).await,
        Command::Pull { model } => pull(&client, cfg, model).await,
        Command::Models => models(&client, cfg).await,
        Command::Query {
            prompt,
            images,
            no_stream,
        } => query(&client, cfg, &prompt.join(" "), &images, no_stream).await,
        Command::Chat { system } => chat(&client, cfg, system).await,
        Command::Annotate {
            corpus,
            categories,
            strategy,
            examples,
            out,
            concurrency,
            system,
            user_format,
        } => {
            let template = PromptTemplate::new(
                system.unwrap_or_else(|| DEFAULT_SYSTEM_PROMPT.to_owned()),
                Vec::new(),
                user_format.unwrap_or_else(|| DEFAULT_USER_FORMAT.to_owned()),
            )?;
            let job = AnnotateJob {
                corpus: &corpus,
                categories: categories.as_deref().map(parse_categories).unwrap_or_default(),
                strategy,
                examples: examples.as_deref(),
                out: &out,
                concurrency,
                template,
            };
            annotate(&client, cfg, job).await
        }
        Command::Embed {
            corpus,
            normalize,
            out,
            concurrency,
        } => embed(&client, cfg, &corpus, normalize, &out, concurrency).await,
        Command::Mock { .. } => unreachable!("handled above"),
    }
}

fn print_json(value: &serde_json::Value) {
    println!("{value}");
}

async fn ping(client: &Client, cfg: &CliConfig) -> Result<u8> {
    let status = client.ping().await;
    match cfg.format {
        OutputFormat::Json => print_json(&serde_json::to_value(&status).expect("status serializes")),
        OutputFormat::Text if status.reachable => match &status.version {
            Some(v) => println!("OK {v}"),
            None => println!("OK"),
        },
        OutputFormat::Text => println!("UNREACHABLE {}", cfg.server.base_url()),
    }
    Ok(if status.reachable { EXIT_OK } else { EXIT_FAILURE })
}

async fn pull(client: &Client, cfg: &CliConfig, model: Option<String>) -> Result<u8> {
    let model: ModelTag = match model {
        Some(m) => m.parse()?,
        None => cfg.model.clone(),
    };
    let mut progress = |e: &StreamEvent| {
        if let StreamEvent::PullProgress {
            status,
            completed,
            total,
        } = e
        {
            match (completed, total) {
                (Some(c), Some(t)) if *t > 0 => eprintln!("{status} {}%", c * 100 / t),
                _ => eprintln!("{status}"),
            }
        }
    };
    let result = client.pull_model(Some(&model), &mut progress).await?;
    match cfg.format {
        OutputFormat::Json => print_json(&serde_json::to_value(&result).expect("pull result serializes")),
        OutputFormat::Text if result.ok => println!("pulled {}", result.model),
        OutputFormat::Text => println!("pull of {} did not finish", result.model),
    }
    Ok(if result.ok { EXIT_OK } else { EXIT_FAILURE })
}

async fn models(client: &Client, cfg: &CliConfig) -> Result<u8> {
    let models = client.list_models().await?;
    match cfg.format {
        OutputFormat::Json => print_json(&serde_json::to_value(&models).expect("models serialize")),
        OutputFormat::Text => {
            for m in &models {
                println!(
                    "{}\t{}\t{}",
                    m.model.canonical(),
                    m.size_bytes,
                    m.modified_at.to_rfc3339()
                );
            }
        }
    }
    Ok(EXIT_OK)
}

fn write_delta(e: &StreamEvent) {
    if let StreamEvent::ContentDelta(text) = e {
        let mut out = std::io::stdout().lock();
        let _ = out.write_all(text.as_bytes());
        let _ = out.flush();
    }
}

async fn query(client: &Client, cfg: &CliConfig, prompt: &str, images: &[String], no_stream: bool) -> Result<u8> {
    let mut encoded = Vec::with_capacity(images.len());
    for source in images {
        encoded.push(encode_image(source).await?);
    }
    let stream = !no_stream && cfg.format == OutputFormat::Text;
    let mut sink = write_delta;
    let completion = client
        .generate(
            prompt,
            &cfg.model,
            &cfg.options,
            &encoded,
            stream.then_some(&mut sink as _),
        )
        .await?;
    match cfg.format {
        OutputFormat::Json => print_json(&json!({
            "model": cfg.model.to_string(),
            "response": completion.text,
            "stats": completion.stats,
        })),
        OutputFormat::Text if stream => println!(),
        OutputFormat::Text => println!("{}", completion.text),
    }
    Ok(EXIT_OK)
}

async fn chat(client: &Client, cfg: &CliConfig, system: Option<String>) -> Result<u8> {
    let mut session = ChatSession::new(cfg.model.clone(), system, cfg.options.clone());
    let interactive = std::io::stdin().is_terminal();
    let stream = cfg.format == OutputFormat::Text;
    let mut lines = BufReader::new(tokio::io::stdin()).lines();
    loop {
        if interactive {
            eprint!("> ");
        }
        let Some(line) = lines.next_line().await.map_err(|e| Error::io("<stdin>", e))? else {
            break;
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('/') {
            let (name, arg) = meta.split_once(char::is_whitespace).unwrap_or((meta, ""));
            match (name, arg.trim()) {
                ("quit", _) => break,
                ("new", _) => {
                    session.reset();
                    eprintln!("started a new conversation");
                }
                ("save", "") => eprintln!("usage: /save <path>"),
                ("save", path) => match session.save_transcript(path) {
                    Ok(()) => eprintln!("saved {} messages to {path}", session.history().len()),
                    Err(e) => eprintln!("ollo: {e}"),
                },
                _ => eprintln!("unknown command /{name} (try /new, /save <path>, /quit)"),
            }
            continue;
        }
        let reply = if stream {
            let mut sink = write_delta;
            session.chat_streaming(client, line, Vec::new(), &mut sink).await
        } else {
            session.chat(client, line, Vec::new()).await
        };
        match reply {
            Ok(_) if stream => println!(),
            Ok(_) => {}
            Err(e) => eprintln!("ollo: {e}"),
        }
    }
    if cfg.format == OutputFormat::Json {
        print_json(&json!({
            "model": session.model().to_string(),
            "messages": session.history(),
        }));
    }
    Ok(EXIT_OK)
}

struct AnnotateJob<'a> {
    corpus: &'a Path,
    categories: Vec<String>,
    strategy: Strategy,
    examples: Option<&'a Path>,
    out: &'a Path,
    concurrency: usize,
    template: PromptTemplate,
}

async fn annotate(client: &Client, cfg: &CliConfig, job: AnnotateJob<'_>) -> Result<u8> {
    let examples = match job.examples {
        Some(path) => read_examples(path, TableFormat::from_path(path))?,
        None => Vec::new(),
    };
    job.strategy.check_examples(examples.len())?;
    let template = job.template.with_examples(examples);
    let records = read_corpus(job.corpus, TableFormat::from_path(job.corpus), &job.categories)?;

    let mut batch = BatchOptions::new(cfg.model.clone())
        .with_options(cfg.options.clone())
        .with_concurrency(job.concurrency);
    if let Some(seed) = cfg.options.seed() {
        batch = batch.with_seed(seed);
    }
    let results = annotate_batch(client, records, &template, job.strategy, &batch, |done, total| {
        eprintln!("{done}/{total}")
    })
    .await?;
    write_results(&results, job.out, TableFormat::from_path(job.out))?;

    let failed = results.iter().filter(|r| r.error.is_some()).count();
    let annotated = results.len() - failed;
    match cfg.format {
        OutputFormat::Json => print_json(&json!({
            "annotated": annotated,
            "failed": failed,
            "out": job.out.display().to_string(),
        })),
        OutputFormat::Text => println!("annotated {annotated}, failed {failed}"),
    }
    Ok(if failed == 0 { EXIT_OK } else { EXIT_FAILURE })
}

async fn embed(
    client: &Client,
    cfg: &CliConfig,
    corpus: &Path,
    normalize: bool,
    out: &Path,
    concurrency: usize,
) -> Result<u8> {
    let records = read_corpus(corpus, TableFormat::from_path(corpus), &[])?;
    let texts: Vec<(String, String)> = records.into_iter().map(|r| (r.id, r.text)).collect();
    if !client.ping().await.reachable {
        return Err(ApiError::unreachable(format!("no server at {}", cfg.server.base_url())).into());
    }
    let matrix = embed_texts(client, &texts, &cfg.model, normalize, concurrency).await?;
    write_matrix(&matrix, out, TableFormat::from_path(out))?;
    match cfg.format {
        OutputFormat::Json => print_json(&json!({
            "rows": matrix.len(),
            "dimension": matrix.dimension(),
            "out": out.display().to_string(),
        })),
        OutputFormat::Text => println!("embedded {} texts, dimension {}", matrix.len(), matrix.dimension()),
    }
    Ok(EXIT_OK)
}

async fn mock(port: u16, fault: Option<Fault>, chunk_size: usize, no_models: bool) -> Result<u8> {
    let mut config = if no_models {
        MockConfig::empty()
    } else {
        MockConfig::default()
    };
    config = config.with_port(port).with_chunk_size(chunk_size);
    if let Some(fault) = fault {
        config = config.with_fault(fault);
    }
    let server = MockServer::start(config).await?;
    println!("listening on {}", server.url());
    let _ = std::io::stdout().flush();
    let _ = tokio::signal::ctrl_c().await;
    server.shutdown().await;
    Ok(EXIT_OK)
}
