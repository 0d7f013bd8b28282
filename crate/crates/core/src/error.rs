use thiserror::Error;

use crate::value::ItemId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the engine can report.
///
/// Each variant maps to exactly one HTTP status and one stable
/// machine-readable code, see [`Error::code`] and [`Error::http_status`].
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    // schema
    #[error("unknown item type `{0}`")]
    UnknownType(String),
    #[error("unknown parent type `{0}`")]
    UnknownParent(String),
    #[error("item type `{0}` is already defined")]
    DuplicateTypeName(String),
    #[error("piece `{piece}` of type `{type_name}` collides with a piece defined by `{other_owner}`")]
    PieceNameCollision {
        type_name: String,
        piece: String,
        other_owner: String,
    },
    #[error("type `{0}` would be its own ancestor")]
    CycleDetected(String),
    #[error("type `{0}` must name at least one parent")]
    MissingParents(String),
    #[error("invalid name `{0}`")]
    InvalidName(String),
    #[error("invalid piece definition `{piece}`: {reason}")]
    InvalidPieceDefinition { piece: String, reason: String },
    #[error("piece `{piece}` targets unknown type `{target}`")]
    UnknownTargetType { piece: String, target: String },
    #[error("schema file line {line}: {message}")]
    SchemaSyntax { line: usize, message: String },

    // store
    #[error("unknown item {0}")]
    UnknownItem(ItemId),
    #[error("item {id} has no version {version}")]
    UnknownVersion { id: ItemId, version: u32 },
    #[error("item {0} has been destroyed")]
    Destroyed(ItemId),
    #[error("required piece `{0}` is missing")]
    MissingRequiredPiece(String),
    #[error("piece `{piece}` points to missing item {target}")]
    DanglingPointer { piece: String, target: ItemId },
    #[error("piece `{piece}` expects a {expected}, item {target} is a {actual}")]
    PointerTypeMismatch {
        piece: String,
        target: ItemId,
        expected: String,
        actual: String,
    },
    #[error("type `{type_name}` has no piece `{piece}`")]
    UnknownPiece { type_name: String, piece: String },
    #[error("piece `{piece}` holds {expected} values, got {actual}")]
    PieceKindMismatch {
        piece: String,
        expected: String,
        actual: String,
    },
    #[error("piece `{0}` cannot be changed")]
    ImmutablePiece(String),
    #[error("item {0} is inactive")]
    ItemInactive(ItemId),
    #[error("item {0} is already inactive")]
    AlreadyInactive(ItemId),
    #[error("item {0} is already active")]
    AlreadyActive(ItemId),
    #[error("item {0} must be deactivated before it can be destroyed")]
    NotDeactivated(ItemId),
    #[error("item {0} is already destroyed")]
    AlreadyDestroyed(ItemId),
    #[error("filter names unknown piece `{0}`")]
    UnknownFilterPiece(String),
    #[error("an acting agent is required")]
    AgentRequired,
    #[error("item {0} is not an Agent")]
    NotAnAgent(ItemId),

    // collections
    #[error("item {0} is not a Collection")]
    NotACollection(ItemId),
    #[error("item {member} is already a member of collection {collection}")]
    DuplicateMembership { collection: ItemId, member: ItemId },
    #[error("item {0} is not a Membership of that collection")]
    NotAMembership(ItemId),

    // annotations
    #[error("item {0} is not a TextDocument")]
    NotATextDocument(ItemId),
    #[error("offset {offset} is outside 0..={length}")]
    OffsetOutOfRange { offset: i64, length: usize },
    #[error("excerpt source item {0} has been destroyed")]
    DanglingSource(ItemId),
    #[error("item {0} is not an Excerpt")]
    NotAnExcerpt(ItemId),

    // permissions
    #[error("permission denied: {ability} on item {item}")]
    PermissionDenied { ability: String, item: String },
    #[error("unknown permission subject: {0}")]
    UnknownSubject(String),
    #[error("ability `{0}` cannot be scoped to a piece")]
    InvalidPieceAbility(String),
    #[error("unknown ability `{0}`")]
    UnknownAbility(String),
    #[error("unknown grant {0}")]
    UnknownGrant(u64),
    #[error("invalid grant target: {0}")]
    InvalidGrantTarget(String),

    // viewers
    #[error("unknown viewer `{0}`")]
    UnknownViewer(String),
    #[error("viewer `{0}` is already registered")]
    DuplicateViewer(String),
    #[error("viewer `{viewer}` does not accept items of type `{type_name}`")]
    ViewerTypeMismatch { viewer: String, type_name: String },
    #[error("viewer `{viewer}` has no action `{action}` (available: {})", available.join(", "))]
    UnknownAction {
        viewer: String,
        action: String,
        available: Vec<String>,
    },
    #[error("no viewer accepts type `{0}`")]
    NoViewer(String),

    // export / service
    #[error("unsupported bundle format version `{0}`")]
    FormatVersionMismatch(String),
    #[error("bundle checksum mismatch")]
    ChecksumMismatch,
    #[error("import target already contains items")]
    NonEmptyTarget,
    #[error("corrupt bundle: {0}")]
    CorruptBundle(String),
    #[error("invalid bearer token")]
    InvalidToken,
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("no route for {method} {path}")]
    NoRoute { method: String, path: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        use Error::*;
        match self {
            UnknownType(_) => "unknown_type",
            UnknownParent(_) => "unknown_parent",
            DuplicateTypeName(_) => "duplicate_type_name",
            PieceNameCollision { .. } => "piece_name_collision",
            CycleDetected(_) => "cycle_detected",
            MissingParents(_) => "missing_parents",
            InvalidName(_) => "invalid_name",
            InvalidPieceDefinition { .. } => "invalid_piece_definition",
            UnknownTargetType { .. } => "unknown_target_type",
            SchemaSyntax { .. } => "schema_syntax",
            UnknownItem(_) => "unknown_item",
            UnknownVersion { .. } => "unknown_version",
            Destroyed(_) => "destroyed",
            MissingRequiredPiece(_) => "missing_required_piece",
            DanglingPointer { .. } => "dangling_pointer",
            PointerTypeMismatch { .. } => "pointer_type_mismatch",
            UnknownPiece { .. } => "unknown_piece",
            PieceKindMismatch { .. } => "piece_kind_mismatch",
            ImmutablePiece(_) => "immutable_piece",
            ItemInactive(_) => "item_inactive",
            AlreadyInactive(_) => "already_inactive",
            AlreadyActive(_) => "already_active",
            NotDeactivated(_) => "not_deactivated",
            AlreadyDestroyed(_) => "already_destroyed",
            UnknownFilterPiece(_) => "unknown_filter_piece",
            AgentRequired => "agent_required",
            NotAnAgent(_) => "not_an_agent",
            NotACollection(_) => "not_a_collection",
            DuplicateMembership { .. } => "duplicate_membership",
            NotAMembership(_) => "not_a_membership",
            NotATextDocument(_) => "not_a_text_document",
            OffsetOutOfRange { .. } => "offset_out_of_range",
            DanglingSource(_) => "dangling_source",
            NotAnExcerpt(_) => "not_an_excerpt",
            PermissionDenied { .. } => "permission_denied",
            UnknownSubject(_) => "unknown_subject",
            InvalidPieceAbility(_) => "invalid_piece_ability",
            UnknownAbility(_) => "unknown_ability",
            UnknownGrant(_) => "unknown_grant",
            InvalidGrantTarget(_) => "invalid_grant_target",
            UnknownViewer(_) => "unknown_viewer",
            DuplicateViewer(_) => "duplicate_viewer",
            ViewerTypeMismatch { .. } => "viewer_type_mismatch",
            UnknownAction { .. } => "unknown_action",
            NoViewer(_) => "no_viewer",
            FormatVersionMismatch(_) => "format_version_mismatch",
            ChecksumMismatch => "checksum_mismatch",
            NonEmptyTarget => "non_empty_target",
            CorruptBundle(_) => "corrupt_bundle",
            InvalidToken => "invalid_token",
            BadRequest(_) => "bad_request",
            NoRoute { .. } => "no_route",
            Io(_) => "io_error",
        }
    }

    pub fn http_status(&self) -> u16 {
        use Error::*;
        match self {
            UnknownType(_) | UnknownItem(_) | UnknownVersion { .. } | UnknownGrant(_)
            | UnknownViewer(_) | UnknownAction { .. } | NoRoute { .. } => 404,
            Destroyed(_) | AlreadyDestroyed(_) | DanglingSource(_) => 410,
            PermissionDenied { .. } => 403,
            InvalidToken => 401,
            DuplicateTypeName(_)
            | ItemInactive(_)
            | AlreadyInactive(_)
            | AlreadyActive(_)
            | NotDeactivated(_)
            | DuplicateMembership { .. }
            | DuplicateViewer(_)
            | NonEmptyTarget => 409,
            NoViewer(_) | Io(_) => 500,
            UnknownParent(_)
            | PieceNameCollision { .. }
            | CycleDetected(_)
            | MissingParents(_)
            | InvalidName(_)
            | InvalidPieceDefinition { .. }
            | UnknownTargetType { .. }
            | SchemaSyntax { .. }
            | MissingRequiredPiece(_)
            | DanglingPointer { .. }
            | PointerTypeMismatch { .. }
            | UnknownPiece { .. }
            | PieceKindMismatch { .. }
            | ImmutablePiece(_)
            | UnknownFilterPiece(_)
            | AgentRequired
            | NotAnAgent(_)
            | NotACollection(_)
            | NotAMembership(_)
            | NotATextDocument(_)
            | OffsetOutOfRange { .. }
            | NotAnExcerpt(_)
            | UnknownSubject(_)
            | InvalidPieceAbility(_)
            | UnknownAbility(_)
            | InvalidGrantTarget(_)
            | ViewerTypeMismatch { .. }
            | FormatVersionMismatch(_)
            | ChecksumMismatch
            | CorruptBundle(_)
            | BadRequest(_) => 400,
        }
    }

    /// JSON error envelope used by the HTTP service and the CLI's `--json` mode.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "error": {
                "code": self.code(),
                "status": self.http_status(),
                "message": self.to_string(),
            }
        })
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::BadRequest(err.to_string())
    }
}
