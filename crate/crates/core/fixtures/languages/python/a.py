from collections import deque


class Graph:
    def __init__(self, edges):
        self.adj = {}
        for u, v in edges:
            self.adj.setdefault(u, []).append(v)
            self.adj.setdefault(v, []).append(u)

    def neighbors(self, node):
        return self.adj.get(node, [])

    def bfs(self, start):
        seen = {start}
        order = []
        queue = deque([start])
        while queue:
            node = queue.popleft()
            order.append(node)
            for nxt in self.neighbors(node):
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        return order

    def shortest_path(self, start, goal):
        parent = {start: None}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            if node == goal:
                break
            for nxt in self.neighbors(node):
                if nxt not in parent:
                    parent[nxt] = node
                    queue.append(nxt)
        if goal not in parent:
            return None
        path = []
        node = goal
        while node is not None:
            path.append(node)
            node = parent[node]
        return list(reversed(path))


def main():
    g = Graph([(1, 2), (2, 3), (3, 4), (1, 5)])
    print(g.bfs(1))
    print(g.shortest_path(5, 4))
