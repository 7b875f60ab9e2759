//! Source text to [`SyntaxTree`] via tree-sitter grammars.
//!
//! Nine grammars are compiled in. Further grammars can be loaded from shared
//! libraries found on `TSED_GRAMMAR_PATH`, each described by a `grammars.toml`
//! manifest in the same format as the built-in one.
//!
//! Syntax errors never abort a parse: error nodes stay in the tree under the
//! backend's own kind name (`ERROR`) and the tree is flagged with
//! [`SyntaxTree::had_parse_errors`].

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tree_sitter::Language;

use crate::tree::{Builder, SyntaxTree};

/// Environment variable holding extra grammar directories.
pub const GRAMMAR_PATH_ENV: &str = "TSED_GRAMMAR_PATH";

/// Manifest pinning the compiled-in grammars.
pub const BUILTIN_MANIFEST: &str = include_str!("../grammars.toml");

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("unknown language '{0}'")]
    UnknownLanguage(String),
    #[error("grammar for '{language}' unavailable: {reason}")]
    BackendUnavailable { language: String, reason: String },
    #[error("parser for '{0}' returned no tree")]
    Aborted(String),
    #[error("invalid grammar manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },
    #[error("{side} side: {source}")]
    Side {
        side: Side,
        #[source]
        source: Box<ParseError>,
    },
}

/// Which input of a pair an error belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Prediction,
    Reference,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Prediction => "pred",
            Side::Reference => "ref",
        })
    }
}

/// Canonical lowercase language name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LanguageId(String);

impl LanguageId {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Resolves a name or alias against the default registry.
    pub fn new(name: &str) -> Result<Self, ParseError> {
        Registry::global().resolve(name)
    }
}

impl fmt::Display for LanguageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for LanguageId {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LanguageId::new(s)
    }
}

impl TryFrom<String> for LanguageId {
    type Error = ParseError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        LanguageId::new(&s)
    }
}

impl From<LanguageId> for String {
    fn from(id: LanguageId) -> String {
        id.0
    }
}

fn alias(name: &str) -> &str {
    match name {
        "py" | "python3" => "python",
        "js" | "node" => "javascript",
        "ts" => "typescript",
        "c#" | "cs" | "c-sharp" | "c_sharp" => "csharp",
        "rb" => "ruby",
        "kt" | "kts" => "kotlin",
        "sh" | "shell" => "bash",
        other => other,
    }
}

/// One manifest entry: which grammar backs a language, and at which version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrammarPin {
    pub grammar: String,
    pub version: String,
    #[serde(default)]
    pub display: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendPin {
    pub name: String,
    pub version: String,
}

/// Parsed `grammars.toml`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrammarManifest {
    #[serde(default)]
    pub backend: Option<BackendPin>,
    #[serde(default)]
    pub languages: BTreeMap<String, GrammarPin>,
}

impl GrammarManifest {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, ParseError> {
        let manifest_err = |reason: String| ParseError::Manifest {
            path: path.to_owned(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| manifest_err(e.to_string()))?;
        Self::parse(&text).map_err(manifest_err)
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN_MANIFEST).expect("built-in manifest is valid")
    }
}

enum Source {
    Builtin(Language),
    Dynamic {
        candidates: Vec<PathBuf>,
        symbol: String,
        loaded: OnceLock<Result<Language, String>>,
    },
}

struct Entry {
    display: String,
    pin: GrammarPin,
    source: Source,
}

/// The set of languages a frontend can parse.
pub struct Registry {
    entries: BTreeMap<String, Entry>,
}

static GLOBAL: Lazy<Arc<Registry>> = Lazy::new(|| Arc::new(Registry::from_env()));

impl Registry {
    /// The compiled-in grammars only.
    pub fn builtin() -> Self {
        let manifest = GrammarManifest::builtin();
        let mut entries = BTreeMap::new();
        for (name, pin) in manifest.languages {
            let language: Language = match name.as_str() {
                "bash" => tree_sitter_bash::LANGUAGE.into(),
                "csharp" => tree_sitter_c_sharp::LANGUAGE.into(),
                "java" => tree_sitter_java::LANGUAGE.into(),
                "javascript" => tree_sitter_javascript::LANGUAGE.into(),
                "kotlin" => tree_sitter_kotlin_ng::LANGUAGE.into(),
                "python" => tree_sitter_python::LANGUAGE.into(),
                "ruby" => tree_sitter_ruby::LANGUAGE.into(),
                "sql" => tree_sitter_sequel::LANGUAGE.into(),
                "typescript" => tree_sitter_typescript::LANGUAGE_TYPESCRIPT.into(),
                other => panic!("built-in manifest lists '{other}' without a compiled grammar"),
            };
            let display = pin.display.clone().unwrap_or_else(|| name.clone());
            entries.insert(
                name,
                Entry {
                    display,
                    pin,
                    source: Source::Builtin(language),
                },
            );
        }
        Registry { entries }
    }

    /// Built-ins plus any grammars described under `TSED_GRAMMAR_PATH`.
    /// Broken manifests on the search path are logged and skipped.
    pub fn from_env() -> Self {
        let mut registry = Self::builtin();
        if let Some(paths) = std::env::var_os(GRAMMAR_PATH_ENV) {
            for dir in std::env::split_paths(&paths) {
                if let Err(e) = registry.add_search_dir(&dir) {
                    log::warn!("{e}");
                }
            }
        }
        registry
    }

    /// Shared default registry, built once from the environment.
    pub fn global() -> Arc<Registry> {
        Arc::clone(&GLOBAL)
    }

    /// Registers the languages of `<dir>/grammars.toml`. Built-in languages
    /// are never replaced. Libraries are only opened on first parse.
    pub fn add_search_dir(&mut self, dir: &Path) -> Result<usize, ParseError> {
        let manifest_path = dir.join("grammars.toml");
        if !manifest_path.exists() {
            return Ok(0);
        }
        let manifest = GrammarManifest::load(&manifest_path)?;
        let mut added = 0;
        for (name, pin) in manifest.languages {
            let name = name.to_lowercase();
            if self.entries.contains_key(&name) {
                continue;
            }
            let candidates = library_candidates(dir, &pin.grammar);
            let symbol = format!("tree_sitter_{}", name.replace('-', "_"));
            let display = pin.display.clone().unwrap_or_else(|| name.clone());
            self.entries.insert(
                name,
                Entry {
                    display,
                    pin,
                    source: Source::Dynamic {
                        candidates,
                        symbol,
                        loaded: OnceLock::new(),
                    },
                },
            );
            added += 1;
        }
        Ok(added)
    }

    /// Sorted canonical names.
    pub fn languages(&self) -> Vec<LanguageId> {
        self.entries.keys().map(|k| LanguageId(k.clone())).collect()
    }

    pub fn resolve(&self, name: &str) -> Result<LanguageId, ParseError> {
        let lower = name.trim().to_lowercase();
        let canonical = alias(&lower);
        if self.entries.contains_key(canonical) {
            Ok(LanguageId(canonical.to_owned()))
        } else {
            Err(ParseError::UnknownLanguage(name.to_owned()))
        }
    }

    /// Human-readable name, e.g. "C#" for `csharp`.
    pub fn display_name(&self, lang: &LanguageId) -> Option<&str> {
        self.entries.get(lang.as_str()).map(|e| e.display.as_str())
    }

    pub fn pin(&self, lang: &LanguageId) -> Option<&GrammarPin> {
        self.entries.get(lang.as_str()).map(|e| &e.pin)
    }

    fn language(&self, lang: &LanguageId) -> Result<Language, ParseError> {
        let entry = self
            .entries
            .get(lang.as_str())
            .ok_or_else(|| ParseError::UnknownLanguage(lang.0.clone()))?;
        match &entry.source {
            Source::Builtin(language) => Ok(language.clone()),
            Source::Dynamic {
                candidates,
                symbol,
                loaded,
            } => loaded
                .get_or_init(|| load_dynamic(candidates, symbol))
                .clone()
                .map_err(|reason| ParseError::BackendUnavailable {
                    language: lang.0.clone(),
                    reason,
                }),
        }
    }
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}

fn library_candidates(dir: &Path, grammar: &str) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for stem in [format!("lib{grammar}"), grammar.to_owned()] {
        for ext in ["so", "dylib", "dll"] {
            out.push(dir.join(format!("{stem}.{ext}")));
        }
    }
    out
}

fn load_dynamic(candidates: &[PathBuf], symbol: &str) -> Result<Language, String> {
    let path = candidates.iter().find(|p| p.exists()).ok_or_else(|| {
        format!(
            "no shared library found (tried {})",
            candidates[0].display()
        )
    })?;
    // SAFETY: the manifest declares this library to be a tree-sitter grammar
    // exporting `symbol`; the library is leaked so the language stays valid.
    unsafe {
        let library = libloading::Library::new(path).map_err(|e| e.to_string())?;
        let library: &'static libloading::Library = Box::leak(Box::new(library));
        let func: libloading::Symbol<unsafe extern "C" fn() -> *const ()> = library
            .get(symbol.as_bytes())
            .map_err(|e| format!("{}: {e}", path.display()))?;
        let language_fn = tree_sitter_language::LanguageFn::from_raw(*func);
        Ok(Language::new(language_fn))
    }
}

/// How node labels are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelPolicy {
    /// Append the source text of named leaves (identifiers, literals) to
    /// their kind, as `kind:text`. Off by default, so renaming a variable
    /// does not change the tree.
    pub include_token_text: bool,
}

thread_local! {
    static PARSER: RefCell<tree_sitter::Parser> = RefCell::new(tree_sitter::Parser::new());
}

/// Parses source into trees with a fixed registry and label policy.
#[derive(Debug, Clone)]
pub struct Frontend {
    registry: Arc<Registry>,
    policy: LabelPolicy,
}

impl Default for Frontend {
    fn default() -> Self {
        Frontend::new(Registry::global(), LabelPolicy::default())
    }
}

impl Frontend {
    pub fn new(registry: Arc<Registry>, policy: LabelPolicy) -> Self {
        Frontend { registry, policy }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn policy(&self) -> LabelPolicy {
        self.policy
    }

    pub fn supported_languages(&self) -> Vec<LanguageId> {
        self.registry.languages()
    }

    pub fn parse(&self, source: &str, lang: &LanguageId) -> Result<SyntaxTree, ParseError> {
        let language = self.registry.language(lang)?;
        PARSER.with(|cell| {
            let mut parser = cell.borrow_mut();
            parser
                .set_language(&language)
                .map_err(|e| ParseError::BackendUnavailable {
                    language: lang.0.clone(),
                    reason: e.to_string(),
                })?;
            let parsed = parser
                .parse(source, None)
                .ok_or_else(|| ParseError::Aborted(lang.0.clone()))?;
            Ok(convert(&parsed, source.as_bytes(), self.policy))
        })
    }

    /// Parses raw bytes, replacing invalid UTF-8 sequences.
    pub fn parse_bytes(&self, source: &[u8], lang: &LanguageId) -> Result<SyntaxTree, ParseError> {
        self.parse(&String::from_utf8_lossy(source), lang)
    }

    pub fn parse_pair(
        &self,
        prediction: &str,
        reference: &str,
        lang: &LanguageId,
    ) -> Result<(SyntaxTree, SyntaxTree), ParseError> {
        // An unknown language is reported as such, not per side.
        self.registry.resolve(lang.as_str())?;
        let side = |side| {
            move |e| ParseError::Side {
                side,
                source: Box::new(e),
            }
        };
        let pred = self
            .parse(prediction, lang)
            .map_err(side(Side::Prediction))?;
        let reference = self.parse(reference, lang).map_err(side(Side::Reference))?;
        Ok((pred, reference))
    }
}

/// Every node, named or anonymous, becomes a tree node labelled by its kind.
fn convert(parsed: &tree_sitter::Tree, source: &[u8], policy: LabelPolicy) -> SyntaxTree {
    let root = parsed.root_node();
    let mut builder = Builder::default();
    let mut cursor = parsed.walk();
    let open = |builder: &mut Builder, node: tree_sitter::Node<'_>| {
        builder
            .open(&label_for(node, source, policy))
            .expect("labels are never empty")
    };
    open(&mut builder, root);
    'outer: loop {
        if cursor.goto_first_child() {
            open(&mut builder, cursor.node());
            continue;
        }
        loop {
            builder.close();
            if cursor.goto_next_sibling() {
                open(&mut builder, cursor.node());
                continue 'outer;
            }
            if !cursor.goto_parent() {
                break 'outer;
            }
        }
    }
    builder.finish(root.has_error())
}

fn label_for(node: tree_sitter::Node<'_>, source: &[u8], policy: LabelPolicy) -> String {
    let kind = node.kind();
    let mut label = if kind.is_empty() {
        format!("#{}", node.kind_id())
    } else {
        kind.to_owned()
    };
    if policy.include_token_text && node.is_named() && node.child_count() == 0 && !node.is_missing()
    {
        if let Some(text) = source.get(node.byte_range()) {
            label.push(':');
            label.push_str(&String::from_utf8_lossy(text));
        }
    }
    label
}
