use futures::Stream;
use serde::{Deserialize, Serialize};

use super::{ClientError, Endpoint, SelectPage};

/// Placeholder in a query body where the keyed strategy injects its FILTER.
pub const KEY_FILTER_SLOT: &str = "{{KEY_FILTER}}";

/// A SELECT to be read page by page.
///
/// `body` is a complete `SELECT ... WHERE { ... }` (optionally followed by
/// GROUP BY) without ORDER BY, LIMIT or OFFSET; the pager appends those.
/// `sort_key` names a variable whose string value is unique per row. It is
/// needed both for a stable OFFSET order and for keyed paging past the
/// endpoint's sort cap, where the body must also contain [`KEY_FILTER_SLOT`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PagedQuery {
    pub prologue: String,
    pub body: String,
    pub sort_key: Option<String>,
}

impl PagedQuery {
    pub fn new(
        prologue: impl Into<String>,
        body: impl Into<String>,
        sort_key: Option<&str>,
    ) -> Self {
        PagedQuery {
            prologue: prologue.into(),
            body: body.into(),
            sort_key: sort_key.map(str::to_owned),
        }
    }

    pub fn offset_query(&self, limit: u32, offset: u64) -> String {
        let body = self.body.replace(KEY_FILTER_SLOT, "");
        let order = match &self.sort_key {
            Some(k) => format!("ORDER BY STR(?{k})\n"),
            None => String::new(),
        };
        format!(
            "{}{}\n{order}LIMIT {limit}\nOFFSET {offset}\n",
            self.prologue,
            body.trim_end()
        )
    }

    /// Inner ordered subselect restricted to keys after `after`.
    pub fn keyed_query(&self, limit: u32, after: &str) -> Result<String, ClientError> {
        let key = self
            .sort_key
            .as_deref()
            .ok_or_else(|| ClientError::CapStrategy("query has no sort key".into()))?;
        if !self.body.contains(KEY_FILTER_SLOT) {
            return Err(ClientError::CapStrategy(format!(
                "query body has no {KEY_FILTER_SLOT} slot for the key filter"
            )));
        }
        let filter = format!("FILTER(STR(?{key}) > \"{}\")", escape_literal(after));
        let inner = self.body.replace(KEY_FILTER_SLOT, &filter);
        Ok(format!(
            "{}SELECT * WHERE {{\n  {{\n{}\nORDER BY STR(?{key})\nLIMIT {limit}\n  }}\n}}\nORDER BY STR(?{key})\n",
            self.prologue,
            inner.trim_end()
        ))
    }
}

fn escape_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

/// Resumable position in a paged read.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageCursor {
    /// Rows consumed so far.
    pub offset: u64,
    /// Sort-key value of the last row consumed.
    pub last_key: Option<String>,
}

/// Reads a [`PagedQuery`] with plain OFFSET paging while
/// `offset + page_size <= sort_cap`, then switches to keyed subqueries.
#[derive(Debug)]
pub struct Pager {
    endpoint: Endpoint,
    query: PagedQuery,
    page_size: u32,
    cursor: PageCursor,
    done: bool,
}

impl Pager {
    pub fn new(endpoint: Endpoint, query: PagedQuery, page_size: u32) -> Result<Self, ClientError> {
        Self::resume(endpoint, query, page_size, PageCursor::default())
    }

    pub fn resume(
        endpoint: Endpoint,
        query: PagedQuery,
        page_size: u32,
        cursor: PageCursor,
    ) -> Result<Self, ClientError> {
        let row_limit = endpoint.config().row_limit;
        if page_size == 0 || page_size > row_limit {
            return Err(ClientError::InvalidInput(format!(
                "page size {page_size} must be in 1..={row_limit}"
            )));
        }
        Ok(Pager {
            endpoint,
            query,
            page_size,
            cursor,
            done: false,
        })
    }

    pub fn cursor(&self) -> &PageCursor {
        &self.cursor
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    fn next_query(&self) -> Result<String, ClientError> {
        let within_cap = match self.endpoint.config().sort_cap {
            Some(cap) => self.cursor.offset + u64::from(self.page_size) <= u64::from(cap),
            None => true,
        };
        if within_cap {
            return Ok(self.query.offset_query(self.page_size, self.cursor.offset));
        }
        let after = self.cursor.last_key.as_deref().ok_or_else(|| {
            ClientError::CapStrategy(format!(
                "no sort key value recorded at offset {} to continue from",
                self.cursor.offset
            ))
        })?;
        self.query.keyed_query(self.page_size, after)
    }

    /// Fetches the next page; `None` once the last page has been returned.
    pub async fn next_page(&mut self) -> Option<Result<SelectPage, ClientError>> {
        if self.done {
            return None;
        }
        let query = match self.next_query() {
            Ok(q) => q,
            Err(e) => {
                self.done = true;
                return Some(Err(e));
            }
        };
        let rows = match self.endpoint.select_rows(&query).await {
            Ok(rows) => rows,
            Err(e) => return Some(Err(e)),
        };
        let page = SelectPage {
            offset: self.cursor.offset,
            is_last: rows.len() < self.page_size as usize,
            rows,
        };
        self.cursor.offset += page.rows.len() as u64;
        if let Some(key) = &self.query.sort_key {
            match page.rows.last().map(|r| r.get(key)) {
                Some(Some(v)) => self.cursor.last_key = Some(v.clone()),
                Some(None) => self.cursor.last_key = None,
                None => {}
            }
        }
        self.done = page.is_last;
        Some(Ok(page))
    }

    pub fn into_stream(self) -> impl Stream<Item = Result<SelectPage, ClientError>> {
        futures::stream::unfold(self, |mut pager| async move {
            let item = pager.next_page().await?;
            Some((item, pager))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> PagedQuery {
        PagedQuery::new(
            "PREFIX dbo: <http://dbpedia.org/ontology/>\n",
            "SELECT ?p ?k WHERE { ?p a dbo:Judge . BIND(STR(?p) AS ?k) {{KEY_FILTER}} }",
            Some("k"),
        )
    }

    #[test]
    fn offset_form() {
        let s = q().offset_query(10, 30);
        assert!(s.starts_with("PREFIX dbo:"));
        assert!(s.contains("ORDER BY STR(?k)\nLIMIT 10\nOFFSET 30"));
        assert!(!s.contains("KEY_FILTER"));
    }

    #[test]
    fn keyed_form_escapes() {
        let s = q().keyed_query(5, "a\"b\\c").unwrap();
        assert!(s.contains(r#"FILTER(STR(?k) > "a\"b\\c")"#));
        assert_eq!(s.matches("ORDER BY STR(?k)").count(), 2);
        assert!(s.contains("LIMIT 5"));
        assert!(!s.contains("OFFSET"));
    }

    #[test]
    fn keyed_needs_key_and_slot() {
        let mut no_key = q();
        no_key.sort_key = None;
        assert!(matches!(
            no_key.keyed_query(5, "x"),
            Err(ClientError::CapStrategy(_))
        ));
        let mut no_slot = q();
        no_slot.body = no_slot.body.replace(KEY_FILTER_SLOT, "");
        assert!(matches!(
            no_slot.keyed_query(5, "x"),
            Err(ClientError::CapStrategy(_))
        ));
    }
}
