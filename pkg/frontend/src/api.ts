// Typed client for the composition engine's HTTP API. The fetch
// implementation is injectable so tests can run against a mock server.

export type Cell = number | string | boolean | null;

export interface ColumnInfo {
  name: string;
  role: 'dimension' | 'measure';
  kind: string;
}

export interface Note {
  code: string;
  message: string;
}

export interface MeasureInfo {
  func: string | null;
  attr: string | null;
  name: string;
  type: string;
}

export interface ViewDoc {
  kind: 'view';
  id: string;
  title: string;
  source_table: string | null;
  filter: string | null;
  group_attrs: string[];
  measure: MeasureInfo;
  mark: string;
  channels: Record<string, string>;
  canonical: boolean;
  layout: 'juxtapose' | 'superpose' | null;
  series: string | null;
  warnings: Note[];
  columns?: ColumnInfo[];
  rows?: Cell[][];
}

export interface ModelEntry {
  group: Cell[];
  coefficients: number[];
  n: number;
}

export interface ModelDoc {
  kind: 'model';
  id: string;
  title: string;
  cond_attrs: string[];
  features: string[];
  models: ModelEntry[];
  mark: string;
  channels: Record<string, string>;
  warnings: Note[];
  columns?: ColumnInfo[];
  rows?: Cell[][];
}

export interface ViewSetDoc {
  kind: 'viewset';
  id: string;
  members: (ViewDoc | ModelDoc)[];
}

export interface ConstDoc {
  kind: 'const';
  id: string;
  value: number;
  label: string;
}

export type ResultDoc = ViewDoc | ModelDoc | ViewSetDoc | ConstDoc;

export type VerdictStatus = 'Safe' | 'Overridable' | 'Rejected';

export interface Verdict {
  status: VerdictStatus;
  relationship: 'Exact' | 'LeftSuperset' | 'Scalar' | null;
  matched: [string, string][];
  warnings: Note[];
}

// operand forms accepted by /safety and /compose
export type Operand =
  | string
  | number
  | { const: { value: number; label?: string } }
  | { legend: { view: string; attr: string; value: Cell } }
  | { marks: { view: string; predicate: string } }
  | { cell: { view: string; key: Record<string, Cell> } }
  | { viewset: string | string[] };

export interface ViewSpec {
  table: string;
  group: string[];
  agg: { func: string; attr: string };
  mark: string;
  filter?: string;
  channels?: Record<string, string>;
  title?: string;
}

export interface ErrorPayload {
  error: string;
  message: string;
  verdict?: Verdict;
  revision?: number;
}

export class ApiError extends Error {
  constructor(readonly status: number, readonly payload: ErrorPayload) {
    super(payload.message ?? payload.error);
  }

  get verdict(): Verdict | undefined {
    return this.payload.verdict;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

interface Enveloped {
  session: string;
  revision: number;
}

export class Client {
  constructor(
    private readonly base: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { 'content-type': 'application/json' } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const resp = await this.fetchImpl(this.base + path, init);
    if (resp.status === 204) return undefined as T;
    const payload = await resp.json();
    if (!resp.ok) throw new ApiError(resp.status, payload as ErrorPayload);
    return payload as T;
  }

  createSession(name?: string): Promise<Enveloped> {
    return this.call('POST', '/sessions', name ? { session: name } : {});
  }

  deleteSession(session: string): Promise<void> {
    return this.call('DELETE', `/sessions/${session}`);
  }

  addTable(session: string, name: string, csv: string, measure: string):
      Promise<Enveloped & { table: string; row_count: number; columns: ColumnInfo[] }> {
    return this.call('POST', `/sessions/${session}/tables`, { name, csv, measure });
  }

  createView(session: string, spec: ViewSpec): Promise<Enveloped & ViewDoc> {
    return this.call('POST', '/views', { session, ...spec });
  }

  listViews(session: string): Promise<Enveloped & { views: ResultDoc[] }> {
    return this.call('GET', `/views?session=${session}`);
  }

  viewData(session: string, id: string): Promise<Enveloped & ResultDoc> {
    return this.call('GET', `/views/${id}/data?session=${session}`);
  }

  safety(session: string, left: Operand, right: Operand, kind?: string):
      Promise<Enveloped & Verdict> {
    return this.call('POST', '/safety', { session, left, right, kind });
  }

  compose(session: string, left: Operand, right: Operand,
          opts: { op?: string; kind?: string; override?: boolean } = {}):
      Promise<Enveloped & ResultDoc> {
    return this.call('POST', '/compose', { session, left, right, ...opts });
  }

  decompose(session: string, view: string, kind: 'extract' | 'explode',
            args: { predicate?: string; attrs?: string[] } = {}):
      Promise<Enveloped & ResultDoc> {
    return this.call('POST', '/decompose', { session, view, kind, args });
  }

  lift(session: string, view: string, features: string[], cond: string[] = []):
      Promise<Enveloped & ModelDoc> {
    return this.call('POST', '/lift', { session, view, features, cond });
  }
}
