use std::fmt::Write;

use super::{Metagraph, SpaceError};
use crate::syntax::Reader;

impl Metagraph {
    /// One fully expanded root expression per line, ascending by root id.
    pub fn dump(&self) -> Result<String, SpaceError> {
        let mut out = String::new();
        for root in self.roots() {
            let expr = self.lift(root)?;
            writeln!(out, "{expr}").expect("writing to a String cannot fail");
        }
        Ok(out)
    }

    pub fn load(text: &str) -> Result<Self, SpaceError> {
        Self::load_with(text, &Reader::default())
    }

    pub fn load_with(text: &str, reader: &Reader) -> Result<Self, SpaceError> {
        let mut g = Metagraph::new();
        g.load_into(text, reader)?;
        Ok(g)
    }

    /// Parses `text` and adds every expression as a root. Nothing is added
    /// when the text fails to parse.
    pub fn load_into(&mut self, text: &str, reader: &Reader) -> Result<(), SpaceError> {
        let exprs = reader.parse_all(text)?;
        for e in &exprs {
            self.add_expression(e);
        }
        Ok(())
    }
}
