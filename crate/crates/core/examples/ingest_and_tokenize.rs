//! Parses a small JSON Lines stream, cleans tweet text into trigram
//! documents and reduces links to their domains.

use sentinel_core::ingest::{extract_domain, normalize_text, parse_tweet_stream, ShortenerList, StopWords};

const STREAM: &str = r#"
{"tweet_id":"1","author_id":"alice","created_at":"2020-07-01T09:15:00Z","text":"The new vaccine trial results are in! https://t.co/abc #covid","urls":["https://www.example-news.com/story/1"]}
{"tweet_id":"2","author_id":"bob","created_at":"2020-07-01T10:00:00Z","text":"RT @alice: The new vaccine trial results are in!","retweeted_author_id":"alice"}
this line is not json
{"tweet_id":"3","author_id":"carol","created_at":"2020-07-02T08:00:00Z","text":"@bob read this","urls":["https://bit.ly/xyz","https://twitter.com/x/status/2"]}
"#;

fn main() -> sentinel_core::Result<()> {
    let corpus = parse_tweet_stream(STREAM.as_bytes())?;
    println!("{} records, {} skipped", corpus.records.len(), corpus.skipped);

    let stopwords = StopWords::new(["the", "are", "in", "this"]);
    let shorteners = ShortenerList::new(["bit.ly"]);
    for r in &corpus.records {
        let doc = normalize_text(&r.text, &stopwords);
        println!("\n{} by {} on {} (retweet: {})", r.tweet_id, r.author_id, r.day(), r.is_retweet());
        println!("  tokens   {:?}", doc.tokens);
        for (t, n) in &doc.trigram_counts {
            println!("  trigram  {} x{n}", t.as_str());
        }
        for url in &r.urls {
            println!("  link     {url} -> {:?}", extract_domain(url, &shorteners)?);
        }
    }
    Ok(())
}
