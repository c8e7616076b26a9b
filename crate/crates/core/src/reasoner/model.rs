use std::collections::HashMap;

use sha2::{Digest, Sha256};

use crate::lang::{flatten_extensions, parse, validate, DeclKind, Declaration, Diagnostic, Specification};

/// Lowercase hex SHA-256 of a model source; the model's version id.
pub fn version_id(source: &[u8]) -> String {
    hex::encode(Sha256::digest(source))
}

/// A parsed, flattened and validated specification with a name index.
#[derive(Debug, Clone)]
pub struct Model {
    spec: Specification,
    index: HashMap<String, usize>,
    version: String,
    warnings: Vec<Diagnostic>,
}

impl Model {
    /// Compiles model text. The version id is the hash of the exact bytes.
    pub fn from_source(source: &str) -> Result<Model, Vec<Diagnostic>> {
        let spec = parse(source)?;
        Self::build(spec, version_id(source.as_bytes()))
    }

    /// Compiles an in-memory specification. The version id hashes its
    /// canonical printed form.
    pub fn from_spec(spec: Specification) -> Result<Model, Vec<Diagnostic>> {
        let version = version_id(spec.to_string().as_bytes());
        Self::build(spec, version)
    }

    fn build(spec: Specification, version: String) -> Result<Model, Vec<Diagnostic>> {
        let flat = flatten_extensions(&spec)?;
        let report = validate(&flat);
        if !report.is_ok() {
            return Err(report.diagnostics);
        }
        let index = flat
            .declarations
            .iter()
            .enumerate()
            .map(|(i, d)| (d.name.clone(), i))
            .collect();
        Ok(Model {
            spec: flat,
            index,
            version,
            warnings: report.diagnostics,
        })
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn spec(&self) -> &Specification {
        &self.spec
    }

    pub fn warnings(&self) -> &[Diagnostic] {
        &self.warnings
    }

    pub fn decl(&self, name: &str) -> Option<&Declaration> {
        self.index.get(name).map(|&i| &self.spec.declarations[i])
    }

    pub fn declarations(&self) -> &[Declaration] {
        &self.spec.declarations
    }

    /// Physical acts in declaration order: the user-executable surface.
    pub fn physical_acts(&self) -> impl Iterator<Item = &Declaration> {
        self.spec
            .declarations
            .iter()
            .filter(|d| d.kind == DeclKind::PhysicalAct)
    }

    /// Storable and derived fact types in declaration order.
    pub fn fact_types(&self) -> impl Iterator<Item = &Declaration> {
        self.spec
            .declarations
            .iter()
            .filter(|d| d.kind.is_fact_type())
    }

    /// The institutional act a physical act synchronises with.
    pub fn institutional_of(&self, physical: &Declaration) -> Option<&Declaration> {
        physical.syncs_with.as_deref().and_then(|n| self.decl(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn version_is_content_hash() {
        let src = crate::fixtures::QUITTANCE;
        let m = Model::from_source(src).unwrap();
        assert_eq!(m.version(), version_id(src.as_bytes()));
        assert_eq!(m.version().len(), 64);
        assert!(m.version().chars().all(|c| c.is_ascii_hexdigit() && !c.is_ascii_uppercase()));
    }

    #[test]
    fn known_digest() {
        // sha256("") from FIPS 180-2 test vectors
        assert_eq!(
            version_id(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn invalid_source_reports_diagnostics() {
        let errs = Model::from_source("Act a Creates missing.").unwrap_err();
        assert!(errs.iter().any(|d| d.message.contains("unresolved")));
    }

    #[test]
    fn extensions_are_flattened() {
        let m = Model::from_source("Act a. Act b Extends a Holds when True.").unwrap();
        assert!(m.decl("b").is_none());
        assert!(m.decl("a").unwrap().holds_when.is_some());
    }
}
