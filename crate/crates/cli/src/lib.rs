//! Command line interface and HTTP service for the geobook engine.

pub mod commands;
pub mod server;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "geobook", version, about = "Geometry textbook knowledge engine")]
pub struct Cli {
    /// Store file.
    #[arg(long, global = true, env = "GEOBOOK_STORE", default_value = "geobook.store")]
    pub store: PathBuf,
    /// Directory of book files used by `serve` and `init --seed`.
    /// Defaults to `books/` next to the store.
    #[arg(long, global = true, env = "GEOBOOK_BOOKS")]
    pub books: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create an empty store, or the Simson chapter with `--seed`.
    Init {
        #[arg(long)]
        seed: bool,
        /// Overwrite an existing store.
        #[arg(long)]
        force: bool,
    },
    /// Add or replace a knowledge object.
    Put(PutArgs),
    /// Run a `keyWords[...]` or `relation[...]` query.
    Query { query: String },
    /// Propose relations for an object from the symbols its formal
    /// representation uses.
    Discover {
        id: String,
        /// Add every candidate to the store.
        #[arg(long)]
        accept: bool,
    },
    #[command(subcommand)]
    Book(BookCommand),
    /// Render a book to `.xml` and `.html`.
    Render {
        book: PathBuf,
        #[arg(long, default_value = "en")]
        locale: String,
        /// `default-en` or `default-zh`; follows the locale when omitted.
        #[arg(long)]
        theme: Option<String>,
        /// Render only this section.
        #[arg(long)]
        section: Option<String>,
        /// Output directory.
        #[arg(long, short, default_value = ".")]
        out: PathBuf,
    },
    /// Prove a stored theorem with Wu's method.
    Prove {
        id: String,
        /// Goal label such as `forward` or `backward`; all goals when omitted.
        #[arg(long)]
        direction: Option<String>,
        #[arg(long)]
        max_steps: Option<usize>,
    },
    /// Compile an object's figure and evaluate it at its default position.
    Figure {
        id: String,
        /// Print a script in this dialect instead (`generic-json`, `ggb-commands`).
        #[arg(long)]
        dialect: Option<String>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

#[derive(Debug, Args)]
pub struct PutArgs {
    /// A JSON knowledge object (`-` for stdin); the other flags are ignored.
    #[arg(long, conflicts_with_all = ["kind", "name"])]
    pub json: Option<PathBuf>,
    #[arg(long, required_unless_present = "json")]
    pub kind: Option<String>,
    #[arg(long, required_unless_present = "json")]
    pub name: Option<String>,
    #[arg(long)]
    pub id: Option<String>,
    /// Comma separated.
    #[arg(long, value_delimiter = ',')]
    pub keywords: Vec<String>,
    /// `locale=text`, repeatable.
    #[arg(long)]
    pub natural: Vec<String>,
    /// File with the formal representation (`-` for stdin).
    #[arg(long)]
    pub formal: Option<PathBuf>,
    /// File with a diagram instruction.
    #[arg(long)]
    pub diagram: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum BookCommand {
    /// Check a book file against the store.
    Check {
        book: PathBuf,
        /// Policy file; the default policy when omitted.
        #[arg(long)]
        policy: Option<PathBuf>,
    },
}

impl Cli {
    pub fn books_dir(&self) -> PathBuf {
        self.books.clone().unwrap_or_else(|| default_books_dir(&self.store))
    }
}

pub fn default_books_dir(store: &Path) -> PathBuf {
    store.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new(".")).join("books")
}
