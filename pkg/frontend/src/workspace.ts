// Workspace state machine. Every gesture maps to one short API call
// sequence, is recorded in a serializable action log, and appends cards.
// Cards are referenced by ordinal (their position in the log's output),
// never by server id, so a log replayed against a fresh session lands on
// the same workspace even though the server hands out different ids.

import {
  ApiError, Cell, Client, ColumnInfo, ModelDoc, Operand, ResultDoc,
  Verdict, ViewDoc, ViewSpec,
} from './api.js';

export type CardRef =
  | { card: number }
  | { value: number; label?: string }
  | { legend: { card: number; attr: string; value: Cell } }
  | { marks: { card: number; predicate: string } }
  | { cell: { card: number; key: Record<string, Cell> } }
  | { viewset: number[] };

export type Action =
  | { kind: 'add-table'; name: string; csv: string; measure: string }
  | { kind: 'create-view'; spec: ViewSpec }
  | { kind: 'compose'; left: CardRef; right: CardRef; op?: string; union?: boolean; override?: boolean }
  | { kind: 'decompose'; source: number; how: 'extract' | 'explode'; predicate?: string; attrs?: string[] }
  | { kind: 'lift'; source: number; features: string[]; cond: string[] };

export interface Card {
  ordinal: number;
  serverId: string;
  title: string;
  doc: ViewDoc | ModelDoc;
}

export interface PendingCompose {
  left: CardRef;
  right: CardRef;
  union: boolean;
  verdict: Verdict;
}

export interface Snapshot {
  cards: { title: string; columns: string[]; rows: Cell[][] }[];
}

// context menu order for the drop gesture; difference is the default
export const OPERATOR_MENU = ['-', '+', 'avg', 'union'] as const;

export class Workspace {
  readonly cards: Card[] = [];
  readonly log: Action[] = [];
  composeMode = false;
  selectedViewset: number[] = [];
  private revision = 0;
  private pending: PendingCompose | null = null;

  constructor(readonly client: Client, readonly session: string) {}

  static async create(client: Client, name?: string): Promise<Workspace> {
    const made = await client.createSession(name);
    const ws = new Workspace(client, made.session);
    ws.revision = made.revision;
    return ws;
  }

  // --- operand resolution ---------------------------------------------

  private idOf(ordinal: number): string {
    const card = this.cards[ordinal];
    if (!card) throw new Error(`no card #${ordinal}`);
    return card.serverId;
  }

  private toOperand(ref: CardRef): Operand {
    if ('card' in ref) return this.idOf(ref.card);
    if ('value' in ref) return { const: { value: ref.value, label: ref.label } };
    if ('legend' in ref) {
      return { legend: { ...ref.legend, view: this.idOf(ref.legend.card) } };
    }
    if ('marks' in ref) {
      return { marks: { view: this.idOf(ref.marks.card), predicate: ref.marks.predicate } };
    }
    if ('cell' in ref) {
      return { cell: { view: this.idOf(ref.cell.card), key: ref.cell.key } };
    }
    return { viewset: ref.viewset.map((n) => this.idOf(n)) };
  }

  private appendResult(doc: ResultDoc): Card[] {
    if (doc.kind === 'viewset') {
      return doc.members.map((m) => this.appendOne(m));
    }
    if (doc.kind === 'const') throw new Error('constants do not become cards');
    return [this.appendOne(doc)];
  }

  private appendOne(doc: ViewDoc | ModelDoc): Card {
    const card: Card = {
      ordinal: this.cards.length,
      serverId: doc.id,
      title: doc.title,
      doc,
    };
    this.cards.push(card);
    return card;
  }

  // --- logged mutations -------------------------------------------------

  async addTable(name: string, csv: string, measure: string): Promise<void> {
    const resp = await this.client.addTable(this.session, name, csv, measure);
    this.revision = resp.revision;
    this.log.push({ kind: 'add-table', name, csv, measure });
  }

  async createView(spec: ViewSpec): Promise<Card> {
    const resp = await this.client.createView(this.session, spec);
    this.revision = resp.revision;
    this.log.push({ kind: 'create-view', spec });
    return this.appendOne(resp);
  }

  // The drag gesture, phase one: source dropped on a target. Exactly one
  // safety call; the caller shows the verdict (context menu, warning
  // dialog, or rejection banner) and then confirms or cancels.
  async beginCompose(left: CardRef, right: CardRef, union = false): Promise<Verdict> {
    if (!this.composeMode) throw new Error('composition mode is off');
    if (this.pending) throw new Error('a composition is already pending');
    const verdict = await this.client.safety(
      this.session, this.toOperand(left), this.toOperand(right), union ? 'union' : 'stat');
    this.pending = { left, right, union, verdict };
    return verdict;
  }

  // Phase two: operator picked (enter accepts the default '-'). Exactly
  // one compose call; the result becomes one or more cards.
  async confirmCompose(op?: string, override = false): Promise<Card[]> {
    const p = this.pending;
    if (!p) throw new Error('no composition pending');
    const union = p.union || op === 'union';
    const opts = {
      op: union ? undefined : op,
      kind: union ? 'union' : 'stat',
      override,
    };
    let resp;
    try {
      resp = await this.client.compose(
        this.session, this.toOperand(p.left), this.toOperand(p.right), opts);
    } finally {
      this.pending = null;
    }
    this.revision = resp.revision;
    this.log.push({
      kind: 'compose', left: p.left, right: p.right,
      op: opts.op, union, override: override || undefined,
    });
    return this.appendResult(resp);
  }

  cancelCompose(): void {
    this.pending = null;
  }

  get pendingCompose(): PendingCompose | null {
    return this.pending;
  }

  async extract(source: number, predicate?: string): Promise<Card[]> {
    const resp = await this.client.decompose(
      this.session, this.idOf(source), 'extract', predicate ? { predicate } : {});
    this.revision = resp.revision;
    this.log.push({ kind: 'decompose', source, how: 'extract', predicate });
    return this.appendResult(resp);
  }

  async explode(source: number, attrs?: string[]): Promise<Card[]> {
    const resp = await this.client.decompose(
      this.session, this.idOf(source), 'explode', attrs ? { attrs } : {});
    this.revision = resp.revision;
    this.log.push({ kind: 'decompose', source, how: 'explode', attrs });
    return this.appendResult(resp);
  }

  async liftModel(source: number, features: string[], cond: string[] = []): Promise<Card[]> {
    const resp = await this.client.lift(this.session, this.idOf(source), features, cond);
    this.revision = resp.revision;
    this.log.push({ kind: 'lift', source, features, cond });
    return this.appendResult(resp);
  }

  // --- unlogged local state ---------------------------------------------

  selectViewset(ordinals: number[]): void {
    this.selectedViewset = [...ordinals];
  }

  snapshot(): Snapshot {
    return {
      cards: this.cards.map((c) => ({
        title: c.title,
        columns: (c.doc.columns ?? []).map((col: ColumnInfo) => col.name),
        rows: c.doc.rows ?? [],
      })),
    };
  }

  // --- replay -------------------------------------------------------------

  // Rebuild a workspace in a fresh session by applying the mutations the
  // log recorded. Safety checks are not repeated: they are read-only and
  // their outcome is already baked into each logged action.
  static async replay(client: Client, log: Action[], name?: string): Promise<Workspace> {
    const ws = await Workspace.create(client, name);
    ws.composeMode = true;
    for (const action of log) {
      switch (action.kind) {
        case 'add-table':
          await ws.addTable(action.name, action.csv, action.measure);
          ws.log.pop();
          break;
        case 'create-view':
          await ws.createView(action.spec);
          ws.log.pop();
          break;
        case 'compose': {
          const resp = await client.compose(
            ws.session, ws.toOperand(action.left), ws.toOperand(action.right),
            {
              op: action.op,
              kind: action.union ? 'union' : 'stat',
              override: action.override ?? false,
            });
          ws.revision = resp.revision;
          ws.appendResult(resp);
          break;
        }
        case 'decompose':
          if (action.how === 'extract') {
            await ws.extract(action.source, action.predicate);
          } else {
            await ws.explode(action.source, action.attrs);
          }
          ws.log.pop();
          break;
        case 'lift':
          await ws.liftModel(action.source, action.features, action.cond);
          ws.log.pop();
          break;
      }
      ws.log.push(action);
    }
    return ws;
  }
}

export { ApiError };
