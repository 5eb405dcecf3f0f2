use std::fmt;

/// A ground first-order term `functor(c1, ..., cn)`.
///
/// Every atom is exactly one MIP variable: two atoms name the same variable
/// iff functor and arguments agree. The derived ordering (functor first, then
/// arguments lexicographically) is the canonical order used for constraint
/// terms, branching ties and enumeration.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub functor: String,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new<F, I, S>(functor: F, args: I) -> Self
    where
        F: Into<String>,
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Atom {
            functor: functor.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    /// Identifier-safe name `functor_arg1_..._argN`, used by the LP exporter.
    pub fn mangled(&self) -> String {
        let mut name = self.functor.clone();
        for arg in &self.args {
            name.push('_');
            name.push_str(arg);
        }
        name
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.functor)?;
        if !self.args.is_empty() {
            write!(f, "({})", self.args.join(","))?;
        }
        Ok(())
    }
}
