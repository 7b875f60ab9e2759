interface Task {
  id: number;
  title: string;
  done: boolean;
  tags: string[];
}

type Filter = (task: Task) => boolean;

export class TaskList {
  private tasks: Task[] = [];
  private nextId = 1;

  add(title: string, tags: string[] = []): Task {
    const task: Task = { id: this.nextId++, title, done: false, tags };
    this.tasks.push(task);
    return task;
  }

  complete(id: number): boolean {
    const task = this.tasks.find((t) => t.id === id);
    if (!task || task.done) {
      return false;
    }
    task.done = true;
    return true;
  }

  filter(predicate: Filter): Task[] {
    return this.tasks.filter(predicate);
  }

  pending(): Task[] {
    return this.filter((t) => !t.done);
  }

  byTag(tag: string): Task[] {
    return this.filter((t) => t.tags.includes(tag));
  }

  summary(): Record<string, number> {
    const counts: Record<string, number> = {};
    for (const task of this.tasks) {
      for (const tag of task.tags) {
        counts[tag] = (counts[tag] ?? 0) + 1;
      }
    }
    return counts;
  }
}

const list = new TaskList();
list.add("write tests", ["dev"]);
list.complete(1);
console.log(list.pending().length);
