//! HTTP service over one store file and a directory of book files.
//!
//! Every mutating request is written to disk before it is acknowledged.
//! Book edits carry the serial they were made against; a stale serial is
//! answered with 409 and the current serial. After each accepted edit the
//! new consistency report is pushed to the book's event stream.

use std::collections::BTreeMap;
use std::convert::Infallible;
use std::path::{Path as FsPath, PathBuf};
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::{stream, Stream, StreamExt};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::{broadcast, Mutex, RwLock};
use tokio_stream::wrappers::BroadcastStream;

use geobook_core::backends::{evaluate, export_script, satisfy_checks, FreeAssignment, WuLimits};
use geobook_core::book::{check, BookError, BookLoadError, EditOp, Policy, Report, Textbook};
use geobook_core::discover::{accept_candidates, discover, DiscoverError, RelationCandidate};
use geobook_core::pipeline::{figure_source, formal_source, Pipeline, PipelineError};
use geobook_core::render::{to_html, to_xml, RenderError, Scope, Theme};
use geobook_core::store::{KnowledgeObject, LoadError, ObjectId, Provenance, RelationKind, Store, StoreError};

#[derive(Debug, Clone)]
pub struct Config {
    pub port: u16,
    pub store: PathBuf,
    pub books: PathBuf,
    /// Announce the address as a JSON line.
    pub json: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EventMessage {
    pub book_id: String,
    pub serial: u64,
    /// `snapshot` for the state at subscription time, `edit` afterwards.
    pub cause: String,
    pub report: Report,
}

struct BookSlot {
    book: Textbook,
    events: broadcast::Sender<EventMessage>,
}

pub struct AppState {
    store: RwLock<Store>,
    store_path: PathBuf,
    books_dir: PathBuf,
    // Lock order: books, then store.
    books: Mutex<BTreeMap<String, BookSlot>>,
    policy: Policy,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, kind: &str, message: impl ToString) -> ApiError {
        ApiError { status, body: json!({ "error": kind, "message": message.to_string() }) }
    }

    fn not_found(what: impl ToString) -> ApiError {
        ApiError::new(StatusCode::NOT_FOUND, "NotFound", what)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

/// The variant name of an error enum, from its debug form.
fn variant<E: std::fmt::Debug>(e: &E) -> String {
    format!("{e:?}").split(|c: char| !c.is_alphanumeric()).next().unwrap_or_default().to_string()
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> ApiError {
        let status = match e {
            StoreError::UnknownObject(_) => StatusCode::NOT_FOUND,
            StoreError::DuplicateRelation { .. } | StoreError::DuplicateDefinition { .. } => StatusCode::CONFLICT,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, &variant(&e), e)
    }
}

impl From<BookError> for ApiError {
    fn from(e: BookError) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, &variant(&e), e)
    }
}

impl From<DiscoverError> for ApiError {
    fn from(e: DiscoverError) -> ApiError {
        match e {
            DiscoverError::Store(s) => s.into(),
            DiscoverError::StaleCandidate { .. } => ApiError::new(StatusCode::CONFLICT, &variant(&e), e),
            _ => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, &variant(&e), e),
        }
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> ApiError {
        match e {
            PipelineError::Store(s) => s.into(),
            _ => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, &variant(&e), e),
        }
    }
}

impl From<RenderError> for ApiError {
    fn from(e: RenderError) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, &variant(&e), e)
    }
}

fn io_error(e: impl ToString) -> ApiError {
    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Io", e)
}

type ApiResult<T> = Result<T, ApiError>;

fn oid(s: &str) -> ApiResult<ObjectId> {
    Ok(ObjectId::new(s)?)
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("cannot load store: {0}")]
    StoreLoadFailure(#[from] LoadError),
    #[error("cannot load book {path}: {source}")]
    BookLoadFailure { path: String, source: BookLoadError },
    #[error("cannot bind port {port}: {reason}")]
    BindFailure { port: u16, reason: String },
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl AppState {
    /// Loads the store and every `*.book` file in the books directory.
    pub fn load(store_path: &FsPath, books_dir: &FsPath) -> Result<AppState, ServeError> {
        let store = Store::load(store_path)?;
        std::fs::create_dir_all(books_dir)?;
        let mut books = BTreeMap::new();
        let mut paths: Vec<PathBuf> =
            std::fs::read_dir(books_dir)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|x| x == "book")).collect();
        paths.sort();
        for p in paths {
            let book = Textbook::load(&p).map_err(|source| ServeError::BookLoadFailure { path: p.display().to_string(), source })?;
            books.insert(book.id().to_string(), BookSlot { book, events: broadcast::channel(1024).0 });
        }
        Ok(AppState {
            store: RwLock::new(store),
            store_path: store_path.to_path_buf(),
            books_dir: books_dir.to_path_buf(),
            books: Mutex::new(books),
            policy: Policy::default_policy(),
        })
    }

    fn book_path(&self, id: &str) -> PathBuf {
        self.books_dir.join(format!("{id}.book"))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/objects", get(list_objects).post(create_object))
        .route("/objects/{id}", get(get_object).put(put_object).delete(delete_object))
        .route("/relations", get(list_relations).post(create_relation))
        .route("/discover/accept", post(discover_accept))
        .route("/discover/{id}", post(discover_object))
        .route("/books", get(list_books).post(create_book))
        .route("/books/{id}", get(get_book))
        .route("/books/{id}/edits", post(edit_book))
        .route("/books/{id}/events", get(book_events))
        .route("/books/{id}/render", get(render_book))
        .route("/prove/{id}", post(prove))
        .route("/figure/{id}/evaluate", post(figure_evaluate))
        .route("/figure/{id}/script", get(figure_script))
        .with_state(state)
}

pub async fn serve(config: Config) -> Result<(), ServeError> {
    let state = Arc::new(AppState::load(&config.store, &config.books)?);
    let listener =
        tokio::net::TcpListener::bind(("127.0.0.1", config.port)).await.map_err(|e| ServeError::BindFailure { port: config.port, reason: e.to_string() })?;
    let addr = listener.local_addr()?;
    if config.json {
        println!("{}", json!({ "listening": format!("http://{addr}") }));
    } else {
        println!("listening on http://{addr}");
    }
    use std::io::Write;
    std::io::stdout().flush()?;
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

#[derive(Deserialize)]
struct KeywordParams {
    keywords: Option<String>,
}

async fn list_objects(State(s): State<Arc<AppState>>, Query(q): Query<KeywordParams>) -> ApiResult<Json<Vec<KnowledgeObject>>> {
    let store = s.store.read().await;
    let objects = match q.keywords.as_deref().filter(|k| !k.trim().is_empty()) {
        Some(k) => {
            let words: Vec<&str> = k.split(',').map(str::trim).filter(|w| !w.is_empty()).collect();
            store.query_keywords(&words)?.iter().filter_map(|id| store.object(id).cloned()).collect()
        }
        None => store.objects().cloned().collect(),
    };
    Ok(Json(objects))
}

async fn get_object(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<KnowledgeObject>> {
    let store = s.store.read().await;
    store.object(&oid(&id)?).cloned().map(Json).ok_or_else(|| ApiError::not_found(format!("object `{id}`")))
}

/// Applies a mutation to the store and saves it before returning.
async fn mutate<T>(s: &AppState, f: impl FnOnce(&mut Store) -> ApiResult<T>) -> ApiResult<T> {
    let mut store = s.store.write().await;
    let mut next = store.clone();
    let out = f(&mut next)?;
    next.save(&s.store_path).map_err(io_error)?;
    *store = next;
    Ok(out)
}

async fn create_object(State(s): State<Arc<AppState>>, Json(obj): Json<KnowledgeObject>) -> ApiResult<(StatusCode, Json<Value>)> {
    let id = mutate(&s, |store| {
        if let Some(id) = obj.id.as_ref().filter(|id| store.object(id).is_some()) {
            return Err(ApiError::new(StatusCode::CONFLICT, "DuplicateId", format!("`{id}` exists; use PUT to replace it")));
        }
        Ok(store.put_knowledge(obj)?)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(json!({ "id": id }))))
}

async fn put_object(State(s): State<Arc<AppState>>, Path(id): Path<String>, Json(mut obj): Json<KnowledgeObject>) -> ApiResult<Json<Value>> {
    obj.id = Some(oid(&id)?);
    let id = mutate(&s, |store| Ok(store.put_knowledge(obj)?)).await?;
    Ok(Json(json!({ "id": id })))
}

async fn delete_object(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    let id = oid(&id)?;
    mutate(&s, |store| Ok(store.delete_object(&id)?)).await?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
struct RelationParams {
    source: Option<String>,
    target: Option<String>,
    kind: Option<String>,
}

async fn list_relations(State(s): State<Arc<AppState>>, Query(q): Query<RelationParams>) -> ApiResult<Json<Value>> {
    let kind: Option<RelationKind> = q.kind.as_deref().map(str::parse).transpose()?;
    let store = s.store.read().await;
    let rels: Vec<_> = store
        .relations()
        .filter(|r| q.source.as_deref().is_none_or(|x| r.source.as_str() == x))
        .filter(|r| q.target.as_deref().is_none_or(|x| r.target.as_str() == x))
        .filter(|r| kind.is_none_or(|k| r.kind == k))
        .collect();
    Ok(Json(json!(rels)))
}

#[derive(Deserialize)]
struct NewRelation {
    source: ObjectId,
    target: ObjectId,
    kind: RelationKind,
    #[serde(default)]
    provenance: Option<Provenance>,
}

async fn create_relation(State(s): State<Arc<AppState>>, Json(r): Json<NewRelation>) -> ApiResult<StatusCode> {
    let prov = r.provenance.unwrap_or(Provenance::Manual);
    mutate(&s, |store| Ok(store.add_relation(&r.source, &r.target, r.kind, prov)?)).await?;
    Ok(StatusCode::CREATED)
}

async fn discover_object(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let store = s.store.read().await;
    Ok(Json(json!(discover(&oid(&id)?, &store)?)))
}

#[derive(Deserialize)]
struct AcceptBody {
    candidates: Vec<RelationCandidate>,
}

async fn discover_accept(State(s): State<Arc<AppState>>, Json(body): Json<AcceptBody>) -> ApiResult<Json<Value>> {
    let added = mutate(&s, |store| Ok(accept_candidates(&body.candidates, store)?)).await?;
    Ok(Json(json!({ "added": added })))
}

async fn list_books(State(s): State<Arc<AppState>>) -> Json<Value> {
    let books = s.books.lock().await;
    Json(json!(books.values().map(|b| json!({ "id": b.book.id(), "serial": b.book.serial, "title": b.book.root.title })).collect::<Vec<_>>()))
}

fn valid_book_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_alphanumeric() || matches!(c, '-' | '_' | '.')) && !id.starts_with('.')
}

async fn create_book(State(s): State<Arc<AppState>>, Json(mut book): Json<Textbook>) -> ApiResult<(StatusCode, Json<Value>)> {
    book.validate()?;
    let id = book.id().to_string();
    if !valid_book_id(&id) {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "InvalidId", format!("`{id}` cannot name a book file")));
    }
    book.serial = 0;
    let mut books = s.books.lock().await;
    if books.contains_key(&id) {
        return Err(ApiError::new(StatusCode::CONFLICT, "DuplicateBook", format!("book `{id}` exists")));
    }
    book.save(&s.book_path(&id)).map_err(io_error)?;
    let report = check(&book, &*s.store.read().await, &s.policy);
    books.insert(id.clone(), BookSlot { book, events: broadcast::channel(1024).0 });
    Ok((StatusCode::CREATED, Json(json!({ "id": id, "serial": 0, "report": report }))))
}

async fn get_book(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let books = s.books.lock().await;
    let slot = books.get(&id).ok_or_else(|| ApiError::not_found(format!("book `{id}`")))?;
    let report = check(&slot.book, &*s.store.read().await, &s.policy);
    Ok(Json(json!({ "book": slot.book, "report": report })))
}

#[derive(Deserialize)]
struct EditBody {
    serial: u64,
    op: EditOp,
}

async fn edit_book(State(s): State<Arc<AppState>>, Path(id): Path<String>, Json(body): Json<EditBody>) -> ApiResult<Json<Value>> {
    let mut books = s.books.lock().await;
    let slot = books.get_mut(&id).ok_or_else(|| ApiError::not_found(format!("book `{id}`")))?;
    if body.serial != slot.book.serial {
        let mut e = ApiError::new(StatusCode::CONFLICT, "Conflict", format!("edit made against serial {}", body.serial));
        e.body["currentSerial"] = json!(slot.book.serial);
        return Err(e);
    }
    let (mut book, inverse) = slot.book.apply(&body.op)?;
    book.serial += 1;
    let report = check(&book, &*s.store.read().await, &s.policy);
    book.save(&s.book_path(&id)).map_err(io_error)?;
    slot.book = book;
    let serial = slot.book.serial;
    let msg = EventMessage { book_id: id, serial, cause: "edit".into(), report: report.clone() };
    // No subscribers is not an error.
    let _ = slot.events.send(msg);
    Ok(Json(json!({ "serial": serial, "report": report, "inverse": inverse })))
}

async fn book_events(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Sse<impl Stream<Item = Result<Event, Infallible>>>> {
    let books = s.books.lock().await;
    let slot = books.get(&id).ok_or_else(|| ApiError::not_found(format!("book `{id}`")))?;
    // Subscribing under the lock means no edit falls between the snapshot
    // and the first streamed report.
    let rx = slot.events.subscribe();
    let report = check(&slot.book, &*s.store.read().await, &s.policy);
    let first = EventMessage { book_id: id, serial: slot.book.serial, cause: "snapshot".into(), report };
    drop(books);
    let to_event = |m: &EventMessage| Event::default().event("report").id(m.serial.to_string()).json_data(m).expect("event serializes");
    let rest = BroadcastStream::new(rx).filter_map(move |m| async move { m.ok().map(|m| Ok(to_event(&m))) });
    let events = stream::once(async move { Ok(to_event(&first)) }).chain(rest);
    Ok(Sse::new(events).keep_alive(KeepAlive::default()))
}

#[derive(Deserialize)]
struct RenderParams {
    locale: Option<String>,
    format: Option<String>,
    section: Option<String>,
    theme: Option<String>,
}

async fn render_book(State(s): State<Arc<AppState>>, Path(id): Path<String>, Query(q): Query<RenderParams>) -> ApiResult<Response> {
    let books = s.books.lock().await;
    let slot = books.get(&id).ok_or_else(|| ApiError::not_found(format!("book `{id}`")))?;
    let locale = q.locale.as_deref().unwrap_or(geobook_core::render::DEFAULT_LOCALE);
    let scope = q.section.map_or(Scope::Whole, Scope::Section);
    let doc = to_xml(&slot.book, &*s.store.read().await, &scope, locale)?;
    match q.format.as_deref().unwrap_or("html") {
        "xml" => Ok(([(header::CONTENT_TYPE, "application/xml; charset=utf-8")], doc.to_xml_string()).into_response()),
        "html" => {
            let theme = match q.theme.as_deref() {
                Some(t) => t.parse::<Theme>()?,
                None => Theme::for_locale(locale),
            };
            Ok(([(header::CONTENT_TYPE, "text/html; charset=utf-8")], to_html(&doc, theme)).into_response())
        }
        f => Err(ApiError::new(StatusCode::BAD_REQUEST, "UnknownFormat", format!("format `{f}`, expected xml or html"))),
    }
}

#[derive(Deserialize, Default)]
#[serde(rename_all = "camelCase")]
struct ProveBody {
    direction: Option<String>,
    max_steps: Option<usize>,
    max_terms: Option<usize>,
}

async fn prove(State(s): State<Arc<AppState>>, Path(id): Path<String>, body: Option<Json<ProveBody>>) -> ApiResult<Json<Value>> {
    let body = body.map(|Json(b)| b).unwrap_or_default();
    let id = oid(&id)?;
    let (pipe, src) = {
        let store = s.store.read().await;
        (Pipeline::for_store(&store), formal_source(&store, &id)?.to_string())
    };
    let mut limits = WuLimits::default();
    limits.max_steps = body.max_steps.unwrap_or(limits.max_steps);
    limits.max_terms = body.max_terms.unwrap_or(limits.max_terms);
    let direction = body.direction;
    let goals = tokio::task::spawn_blocking(move || pipe.prove(&src, direction.as_deref(), &limits)).await.map_err(io_error)??;
    Ok(Json(json!({ "object": id, "goals": goals })))
}

#[derive(Deserialize, Default)]
#[serde(rename_all = "camelCase")]
struct EvaluateBody {
    #[serde(default)]
    assignment: FreeAssignment,
    /// Adjust the latest free values so that unmatched premises hold.
    #[serde(default)]
    satisfy_checks: bool,
}

async fn compile_figure(s: &AppState, id: &str) -> ApiResult<geobook_core::backends::ConstructionSequence> {
    let id = oid(id)?;
    let store = s.store.read().await;
    let src = figure_source(&store, &id)?;
    Ok(Pipeline::for_store(&store).figure(src)?)
}

async fn figure_evaluate(State(s): State<Arc<AppState>>, Path(id): Path<String>, body: Option<Json<EvaluateBody>>) -> ApiResult<Json<Value>> {
    let body = body.map(|Json(b)| b).unwrap_or_default();
    let seq = compile_figure(&s, &id).await?;
    let assignment = if body.satisfy_checks {
        satisfy_checks(&seq, &body.assignment)
            .ok_or_else(|| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "NoConvergence", "checks could not be satisfied"))?
    } else {
        body.assignment
    };
    let fig = evaluate(&seq, &assignment);
    Ok(Json(json!({ "object": id, "construction": seq, "assignment": assignment, "figure": fig })))
}

#[derive(Deserialize)]
struct ScriptParams {
    dialect: Option<String>,
}

async fn figure_script(State(s): State<Arc<AppState>>, Path(id): Path<String>, Query(q): Query<ScriptParams>) -> ApiResult<Response> {
    let seq = compile_figure(&s, &id).await?;
    let dialect = q.dialect.as_deref().unwrap_or("generic-json");
    let script = export_script(&seq, dialect).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, &variant(&e), e))?;
    let ty = if dialect == "generic-json" { "application/json" } else { "text/plain; charset=utf-8" };
    Ok(([(header::CONTENT_TYPE, ty)], script).into_response())
}
