//! The `ollo` command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 model missing, 64 usage error.
//! Generated text goes to stdout; progress and diagnostics go to stderr.

mod commands;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::annotate::Strategy;
use crate::error::{Error, Result};
use crate::mockd::Fault;
use crate::transport::{
    GenerationOptions, ModelTag, ServerConfig, DEFAULT_HOST, DEFAULT_MODEL, DEFAULT_TIMEOUT_SECS, HOST_ENV, MODEL_ENV,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_MODEL_MISSING: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug, Parser)]
#[command(name = "ollo", version, about = "Talk to a local Ollama server")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct GlobalArgs {
    /// Server URL [env: OLLO_HOST] [default: http://localhost:11434]
    #[arg(long, global = true)]
    pub host: Option<String>,
    /// Model name, optionally with a tag [env: OLLO_MODEL] [default: llama2]
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Sampling seed; implies temperature 0 unless --temperature is given
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub seed: Option<i64>,
    #[arg(long, global = true)]
    pub temperature: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
    /// Per-request timeout in seconds
    #[arg(long, global = true)]
    pub timeout: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that the server answers
    Ping,
    /// Download a model (the configured model if none is given)
    Pull { model: Option<String> },
    /// List locally available models
    Models,
    /// One-off completion
    Query {
        #[arg(required = true, num_args = 1..)]
        prompt: Vec<String>,
        /// Image file or URL to attach; repeatable
        #[arg(long = "image")]
        images: Vec<String>,
        #[arg(long)]
        no_stream: bool,
    },
    /// Interactive chat; /new resets, /save <path> writes a transcript, /quit exits
    Chat {
        #[arg(long)]
        system: Option<String>,
    },
    /// Classify every text in a CSV or JSONL corpus
    Annotate {
        corpus: PathBuf,
        /// Categories separated by '|', used for rows without their own
        #[arg(long)]
        categories: Option<String>,
        #[arg(long, default_value = "zero_shot")]
        strategy: Strategy,
        /// CSV or JSONL file with `text` and `answer` columns
        #[arg(long)]
        examples: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        concurrency: usize,
        #[arg(long)]
        system: Option<String>,
        /// User message template with {text} and {categories} placeholders
        #[arg(long)]
        user_format: Option<String>,
    },
    /// Embed every text in a CSV or JSONL corpus into a matrix
    Embed {
        corpus: PathBuf,
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        concurrency: usize,
    },
    /// Run the deterministic mock server until interrupted
    Mock {
        #[arg(long, default_value_t = 11434)]
        port: u16,
        #[arg(long)]
        fault: Option<Fault>,
        #[arg(long, default_value_t = 4096)]
        chunk_size: usize,
        /// Start with no models registered
        #[arg(long)]
        no_models: bool,
    },
}

/// Settings after applying flag > environment > default.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub server: ServerConfig,
    pub model: ModelTag,
    pub options: GenerationOptions,
    pub format: OutputFormat,
}

/// First of `flag`, `env`, `default` that is present.
pub fn resolve_setting(flag: Option<&str>, env: Option<&str>, default: &str) -> String {
    flag.or(env).unwrap_or(default).to_owned()
}

impl CliConfig {
    /// `env` looks up an environment variable; pass a closure over a map in tests.
    pub fn resolve(args: &GlobalArgs, env: impl Fn(&str) -> Option<String>) -> Result<Self> {
        let host_env = env(HOST_ENV).filter(|s| !s.is_empty());
        let model_env = env(MODEL_ENV).filter(|s| !s.is_empty());
        let host = resolve_setting(args.host.as_deref(), host_env.as_deref(), DEFAULT_HOST);
        let model: ModelTag = resolve_setting(args.model.as_deref(), model_env.as_deref(), DEFAULT_MODEL).parse()?;

        let server = ServerConfig::new(&host)?
            .with_timeout_secs(args.timeout.unwrap_or(DEFAULT_TIMEOUT_SECS))?
            .with_default_model(model.clone());

        let mut options = GenerationOptions::new();
        if let Some(t) = args.temperature {
            options = options.with_temperature(t)?;
        }
        if let Some(seed) = args.seed {
            options = options.seeded_default(seed);
        }
        Ok(Self {
            server,
            model,
            options,
            format: args.format,
        })
    }
}

/// Maps a failure onto the documented exit codes.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Api(e) if e.is_model_missing() => EXIT_MODEL_MISSING,
        Error::InvalidArgument(_) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub async fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    run_cli(cli).await
}

pub async fn run_cli(cli: Cli) -> u8 {
    let config = match CliConfig::resolve(&cli.global, |k| std::env::var(k).ok()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("ollo: {e}");
            return exit_code(&e);
        }
    };
    // The mock server treats Ctrl-C as its normal stop signal.
    let outcome = if matches!(cli.command, Command::Mock { .. }) {
        commands::dispatch(cli.command, &config).await
    } else {
        tokio::select! {
            r = commands::dispatch(cli.command, &config) => r,
            _ = tokio::signal::ctrl_c() => {
                eprintln!("ollo: interrupted");
                return EXIT_FAILURE;
            }
        }
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("ollo: {e}");
            exit_code(&e)
        }
    }
}

pub fn main() -> ExitCode {
    let rt = match tokio::runtime::Builder::new_multi_thread().enable_all().build() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("ollo: cannot start runtime: {e}");
            return ExitCode::from(EXIT_FAILURE);
        }
    };
    let code = rt.block_on(run(std::env::args_os()));
    // A pending stdin read in the REPL would otherwise block shutdown.
    rt.shutdown_background();
    ExitCode::from(code)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn env_of(pairs: &[(&str, &str)]) -> impl Fn(&str) -> Option<String> {
        let map: HashMap<String, String> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        move |k| map.get(k).cloned()
    }

    fn args(host: Option<&str>, model: Option<&str>) -> GlobalArgs {
        GlobalArgs {
            host: host.map(str::to_owned),
            model: model.map(str::to_owned),
            ..GlobalArgs::default()
        }
    }

    #[test]
    fn precedence_matrix() {
        let flag_host = "http://flag:1";
        let env_host = "http://env:2";
        let cases = [
            (
                Some(flag_host),
                Some(env_host),
                "http://flag:1/",
                Some("phi"),
                Some("mistral"),
                "phi",
            ),
            (Some(flag_host), None, "http://flag:1/", Some("phi"), None, "phi"),
            (None, Some(env_host), "http://env:2/", None, Some("mistral"), "mistral"),
            (None, None, "http://localhost:11434/", None, None, "llama2"),
        ];
        for (fh, eh, want_host, fm, em, want_model) in cases {
            let mut env = Vec::new();
            if let Some(h) = eh {
                env.push((HOST_ENV, h));
            }
            if let Some(m) = em {
                env.push((MODEL_ENV, m));
            }
            let cfg = CliConfig::resolve(&args(fh, fm), env_of(&env)).unwrap();
            assert_eq!(cfg.server.base_url().as_str(), want_host);
            assert_eq!(cfg.model.to_string(), want_model);
            assert_eq!(cfg.server.default_model(), &cfg.model);
        }
    }

    #[test]
    fn empty_env_counts_as_unset() {
        let cfg = CliConfig::resolve(&args(None, None), env_of(&[(HOST_ENV, ""), (MODEL_ENV, "")])).unwrap();
        assert_eq!(cfg.model.to_string(), DEFAULT_MODEL);
    }

    #[test]
    fn bad_host_is_usage_error() {
        let err = CliConfig::resolve(&args(Some("not a url"), None), env_of(&[])).unwrap_err();
        assert_eq!(exit_code(&err), EXIT_USAGE);
    }

    #[test]
    fn seed_implies_zero_temperature_unless_given() {
        let mut a = GlobalArgs {
            seed: Some(42),
            ..GlobalArgs::default()
        };
        let cfg = CliConfig::resolve(&a, env_of(&[])).unwrap();
        assert_eq!(cfg.options, GenerationOptions::reproducible(42));
        a.temperature = Some(0.7);
        let cfg = CliConfig::resolve(&a, env_of(&[])).unwrap();
        assert_eq!(cfg.options.temperature(), Some(0.7));
        assert_eq!(cfg.options.seed(), Some(42));
    }

    #[test]
    fn exit_code_mapping() {
        use crate::transport::ApiError;
        assert_eq!(exit_code(&ApiError::model_missing("x").into()), EXIT_MODEL_MISSING);
        assert_eq!(exit_code(&ApiError::unreachable("x").into()), EXIT_FAILURE);
        assert_eq!(exit_code(&Error::InvalidArgument("x".into())), EXIT_USAGE);
    }

    #[test]
    fn parses_global_flags_after_subcommand() {
        let cli = Cli::try_parse_from(["ollo", "query", "--seed", "42", "why", "is", "the", "sky", "blue?"]).unwrap();
        assert_eq!(cli.global.seed, Some(42));
        let Command::Query { prompt, .. } = cli.command else {
            panic!("expected query");
        };
        assert_eq!(prompt.join(" "), "why is the sky blue?");
    }

    #[test]
    fn strategy_and_fault_parse() {
        let cli =
            Cli::try_parse_from(["ollo", "annotate", "c.csv", "--out", "o.csv", "--strategy", "few-shot"]).unwrap();
        assert!(matches!(
            cli.command,
            Command::Annotate {
                strategy: Strategy::FewShot,
                ..
            }
        ));
        let cli = Cli::try_parse_from(["ollo", "mock", "--fault", "http500", "--port", "0"]).unwrap();
        assert!(matches!(
            cli.command,
            Command::Mock {
                fault: Some(Fault::Http500),
                port: 0,
                ..
            }
        ));
    }
}
