//! Text output helpers: lossless float formatting and a small JSON writer.
//!
//! Every float the tools emit goes through [`fmt_g17`], which prints 17
//! significant digits in scientific notation — enough for the value to
//! parse back to the identical bit pattern — so that written reports and
//! measure files are exact artifacts, not approximations.

/// Format with 17 significant digits (`1.2500000000000000e-1`); the output
/// round-trips to the same `f64`.
pub fn fmt_g17(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Minimal streaming JSON writer (objects, arrays, scalars) with the
/// crate's float formatting. Panics on misuse (value without a key inside
/// an object) only via debug assertions; callers are internal.
pub struct JsonWriter {
    out: String,
    /// One entry per open container: `true` once it has at least one item.
    has_items: Vec<bool>,
    pending_key: bool,
}

impl JsonWriter {
    pub fn new() -> JsonWriter {
        JsonWriter {
            out: String::new(),
            has_items: Vec::new(),
            pending_key: false,
        }
    }

    fn before_value(&mut self) {
        if self.pending_key {
            self.pending_key = false;
            return;
        }
        if let Some(top) = self.has_items.last_mut() {
            if *top {
                self.out.push(',');
            }
            *top = true;
        }
    }

    pub fn begin_object(&mut self) -> &mut Self {
        self.before_value();
        self.out.push('{');
        self.has_items.push(false);
        self
    }

    pub fn end_object(&mut self) -> &mut Self {
        self.has_items.pop();
        self.out.push('}');
        self
    }

    pub fn begin_array(&mut self) -> &mut Self {
        self.before_value();
        self.out.push('[');
        self.has_items.push(false);
        self
    }

    pub fn end_array(&mut self) -> &mut Self {
        self.has_items.pop();
        self.out.push(']');
        self
    }

    pub fn key(&mut self, k: &str) -> &mut Self {
        if let Some(top) = self.has_items.last_mut() {
            if *top {
                self.out.push(',');
            }
            *top = true;
        }
        self.push_escaped(k);
        self.out.push(':');
        self.pending_key = true;
        self
    }

    pub fn string(&mut self, s: &str) -> &mut Self {
        self.before_value();
        self.push_escaped(s);
        self
    }

    pub fn float(&mut self, x: f64) -> &mut Self {
        self.before_value();
        if x.is_finite() {
            self.out.push_str(&fmt_g17(x));
        } else {
            // JSON has no literals for these; stringify to stay parseable.
            self.push_escaped(&format!("{}", x));
        }
        self
    }

    pub fn uint(&mut self, u: u64) -> &mut Self {
        self.before_value();
        self.out.push_str(&u.to_string());
        self
    }

    pub fn int(&mut self, i: i64) -> &mut Self {
        self.before_value();
        self.out.push_str(&i.to_string());
        self
    }

    pub fn boolean(&mut self, b: bool) -> &mut Self {
        self.before_value();
        self.out.push_str(if b { "true" } else { "false" });
        self
    }

    fn push_escaped(&mut self, s: &str) {
        self.out.push('"');
        for ch in s.chars() {
            match ch {
                '"' => self.out.push_str("\\\""),
                '\\' => self.out.push_str("\\\\"),
                '\n' => self.out.push_str("\\n"),
                '\r' => self.out.push_str("\\r"),
                '\t' => self.out.push_str("\\t"),
                c if (c as u32) < 0x20 => {
                    self.out.push_str(&format!("\\u{:04x}", c as u32));
                }
                c => self.out.push(c),
            }
        }
        self.out.push('"');
    }

    pub fn finish(self) -> String {
        self.out
    }
}

impl Default for JsonWriter {
    fn default() -> Self {
        JsonWriter::new()
    }
}
