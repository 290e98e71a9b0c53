//! Ordered key/value reports, rendered as `key = value` text or as a CSV
//! header plus one row.

use phasenoise::fmt::float;

use crate::error::CliResult;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Fields(Vec<(String, String)>);

impl Fields {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(&mut self, key: impl Into<String>, value: impl Into<String>) -> &mut Self {
        self.0.push((key.into(), value.into()));
        self
    }

    pub fn num(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.text(key, float(value))
    }

    pub fn opt(&mut self, key: impl Into<String>, value: Option<f64>) -> &mut Self {
        self.text(key, value.map(float).unwrap_or_default())
    }

    pub fn flag(&mut self, key: impl Into<String>, value: bool) -> &mut Self {
        self.text(key, if value { "true" } else { "false" })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|(k, _)| k.as_str())
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.0 {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(if v.is_empty() { "n/a" } else { v });
            s.push('\n');
        }
        s
    }

    pub fn render_csv(&self) -> CliResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.0.iter().map(|(k, _)| k))?;
        w.write_record(self.0.iter().map(|(_, v)| v))?;
        Ok(String::from_utf8(w.into_inner().map_err(|e| phasenoise::Error::Io(e.into_error()))?).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_both_forms() {
        let mut f = Fields::new();
        f.num("n", 5e11).text("name", "a,b").opt("t_eff", None).flag("ok", true);
        assert_eq!(f.render_text(), "n = 500000000000\nname = a,b\nt_eff = n/a\nok = true\n");
        assert_eq!(f.render_csv().unwrap(), "n,name,t_eff,ok\n500000000000,\"a,b\",,true\n");
        assert_eq!(f.get("name"), Some("a,b"));
    }
}
