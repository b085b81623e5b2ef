/** Error vocabulary, aligned with the names the pipeline package uses. */

export class ModelUnavailable extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ModelUnavailable";
  }
}

export class PreprocessFailure extends Error {
  constructor(message: string) {
    super(message);
    this.name = "PreprocessFailure";
  }
}

export class MalformedFile extends Error {
  constructor(message: string) {
    super(message);
    this.name = "MalformedFile";
  }
}

export class ParseError extends Error {
  /** 1-based line number when the failure is tied to one input line. */
  line: number | null;

  constructor(message: string, line: number | null = null) {
    super(line === null ? message : `line ${line}: ${message}`);
    this.name = "ParseError";
    this.line = line;
  }
}

export class MissingFile extends Error {
  constructor(message: string) {
    super(message);
    this.name = "MissingFile";
  }
}

export class DuplicateId extends Error {
  constructor(message: string) {
    super(message);
    this.name = "DuplicateId";
  }
}

export class UnsupportedFormat extends Error {
  constructor(message: string) {
    super(message);
    this.name = "UnsupportedFormat";
  }
}

export class UsageError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "UsageError";
  }
}
