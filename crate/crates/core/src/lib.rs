//! Stream runtime verification: specifications are systems of stream
//! equations over an input trace, checked for well-definedness and evaluated
//! online in bounded memory.

pub mod analysis;
pub mod ast;
pub mod cli;
pub mod engine;
pub mod frontend;
pub mod io;
pub mod stdlib;
pub mod value;

use thiserror::Error;

use ast::{type_check, TypeError, TypedSpec};
use frontend::{expand, parse_spec, ExpandError, ParseError, SurfaceSpec, DEFAULT_MAX_DEPTH};

/// Source text with a label for error messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Source {
    pub origin: String,
    pub text: String,
}

impl Source {
    pub fn new(origin: impl Into<String>, text: impl Into<String>) -> Self {
        Source {
            origin: origin.into(),
            text: text.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{origin}:{error}")]
    Parse { origin: String, error: ParseError },
    #[error("{0}")]
    Expand(#[from] ExpandError),
    #[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))]
    Type(Vec<TypeError>),
    #[error("unknown library `{0}`")]
    UnknownLibrary(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Parses `main` together with template libraries, expands and type checks.
pub fn compile(main: &Source, libs: &[Source], max_depth: usize) -> Result<TypedSpec, LoadError> {
    let parse = |s: &Source| {
        parse_spec(&s.text).map_err(|error| LoadError::Parse {
            origin: s.origin.clone(),
            error,
        })
    };
    let mut surface = SurfaceSpec::default();
    for lib in libs {
        surface.extend(parse(lib)?);
    }
    surface.extend(parse(main)?);
    let spec = expand(&surface, max_depth)?;
    type_check(&spec).map_err(LoadError::Type)
}

/// Sources of the named shipped libraries and their dependencies.
pub fn bundle_sources<'n>(
    names: impl IntoIterator<Item = &'n str>,
) -> Result<Vec<Source>, LoadError> {
    let libs = stdlib::resolve_bundles(names).map_err(LoadError::UnknownLibrary)?;
    Ok(libs
        .into_iter()
        .map(|l| Source::new(format!("<{}>", l.name), l.source))
        .collect())
}

/// Compiles `src` with shipped libraries at the default expansion budget.
pub fn compile_with_bundles<S: AsRef<str>>(
    src: &str,
    bundles: &[S],
) -> Result<TypedSpec, LoadError> {
    let libs = bundle_sources(bundles.iter().map(AsRef::as_ref))?;
    compile(&Source::new("<input>", src), &libs, DEFAULT_MAX_DEPTH)
}

pub fn compile_example(ex: &stdlib::Example) -> Result<TypedSpec, LoadError> {
    compile_with_bundles(&ex.source, &ex.bundles)
}
